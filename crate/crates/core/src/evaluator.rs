//! Series evaluation of the fundamental solution and its derivatives,
//!
//! `∂^I Φ(r) = 1/(4π r^{I+1}) Σ_{ℓ ≡ I (mod 2), ℓ ≥ I} P_ℓ^I(0) Σ_m E^{ℓm} Y_ℓ^m(r̂)`,
//!
//! plus the traction kernel and sampling over the unit sphere.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expansion::{CoeffTable, MultiIndex};
use crate::materials::ExtendedTensor;
use crate::quadrature::gauss_legendre;
use crate::special::HarmonicSet;

/// Real kernel matrix plus the largest discarded imaginary part, relative to
/// the largest entry.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelValue {
    pub matrix: DMatrix<f64>,
    pub imag_residual: f64,
}

fn norm3(r: &[f64; 3]) -> f64 {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
}

fn check_table(table: &CoeffTable) -> Result<()> {
    if (table.degree() as u32) < table.order() {
        return Err(Error::Range(format!(
            "table of degree {} has no terms for derivative order {}",
            table.degree(),
            table.order()
        )));
    }
    Ok(())
}

/// Angular part `Σ P_ℓ^I(0) Σ_m E^{ℓm} Y_ℓ^m(r̂)`: real part and the
/// imaginary part of the `m = 0` terms (the `±m` pairs cancel exactly).
fn angular_sum(table: &CoeffTable, dir: [f64; 3]) -> (Vec<f64>, Vec<f64>) {
    let n = table.field_dim();
    let nn = n * n;
    let order = table.order() as usize;
    let h = HarmonicSet::at_direction(table.degree(), dir);
    let mut re = vec![0.0; nn];
    let mut im = vec![0.0; nn];
    let mut acc = vec![Complex64::new(0.0, 0.0); nn];
    let top = table.degree() - (table.degree() - order) % 2;
    let mut l = top;
    loop {
        let p = table.prefactors()[l];
        if p != 0.0 {
            acc.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for m in (1..=l).rev() {
                let y = h.get(l, m);
                for (a, e) in acc.iter_mut().zip(table.block(l, m as i32)) {
                    *a += e * y;
                }
            }
            let y0 = h.get(l, 0).re;
            for (k, e) in table.block(l, 0).iter().enumerate() {
                re[k] += p * (2.0 * acc[k].re + e.re * y0);
                im[k] += p * e.im * y0;
            }
        }
        if l < order + 2 {
            break;
        }
        l -= 2;
    }
    (re, im)
}

fn finish(n: usize, re: &[f64], im: &[f64], scale: f64) -> KernelValue {
    let matrix = DMatrix::from_fn(n, n, |a, b| re[a * n + b] * scale);
    let big = re.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let imag = im.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    KernelValue {
        matrix,
        imag_residual: if big > 0.0 { imag / big } else { imag },
    }
}

fn radial_scale(r: f64, order: u32) -> f64 {
    1.0 / (4.0 * PI * r.powi(order as i32 + 1))
}

/// Kernel at the field point `r` (relative to the source, metres).
pub fn evaluate(table: &CoeffTable, r: [f64; 3]) -> Result<KernelValue> {
    check_table(table)?;
    let d = norm3(&r);
    if !(d > 0.0) {
        return Err(Error::ZeroDistance { index: None });
    }
    let dir = [r[0] / d, r[1] / d, r[2] / d];
    let (re, im) = angular_sum(table, dir);
    Ok(finish(table.field_dim(), &re, &im, radial_scale(d, table.order())))
}

/// Kernel at many points; points sharing a direction share one angular sum.
/// Results keep input order.
pub fn evaluate_batch(table: &CoeffTable, points: &[[f64; 3]]) -> Result<Vec<KernelValue>> {
    check_table(table)?;
    let mut dirs: Vec<[f64; 3]> = Vec::new();
    let mut slot: HashMap<[u64; 3], usize> = HashMap::new();
    let mut plan = Vec::with_capacity(points.len());
    for (i, r) in points.iter().enumerate() {
        let d = norm3(r);
        if !(d > 0.0) {
            return Err(Error::ZeroDistance { index: Some(i) });
        }
        let dir = [r[0] / d, r[1] / d, r[2] / d];
        let key = dir.map(f64::to_bits);
        let k = *slot.entry(key).or_insert_with(|| {
            dirs.push(dir);
            dirs.len() - 1
        });
        plan.push((k, d));
    }
    let sums: Vec<(Vec<f64>, Vec<f64>)> = dirs.par_iter().map(|&dir| angular_sum(table, dir)).collect();
    let n = table.field_dim();
    Ok(plan
        .into_iter()
        .map(|(k, d)| finish(n, &sums[k].0, &sums[k].1, radial_scale(d, table.order())))
        .collect())
}

/// `T_PI = n_l c_lIJk ∂_k Φ_PJ`, from the three first-derivative tables in
/// axis order.
pub fn traction_kernel(
    ext: &ExtendedTensor,
    first_derivatives: [&CoeffTable; 3],
    r: [f64; 3],
    normal: [f64; 3],
) -> Result<DMatrix<f64>> {
    let hash = ext.material_hash();
    for (axis, t) in first_derivatives.iter().enumerate() {
        if t.material_hash() != hash {
            return Err(Error::Consistency(format!(
                "derivative table for axis {} was built for another material",
                axis + 1
            )));
        }
        if t.multi_index() != MultiIndex::ZERO.raised(axis + 1) {
            return Err(Error::Consistency(format!(
                "table {} is not the first derivative along axis {}",
                t.multi_index(),
                axis + 1
            )));
        }
    }
    let n = ext.field_dim();
    let grads: Vec<DMatrix<f64>> = first_derivatives
        .iter()
        .map(|t| evaluate(t, r).map(|v| v.matrix))
        .collect::<Result<_>>()?;
    Ok(traction_from_gradient(ext, &grads, normal, n))
}

/// The same contraction for any gradient `∂_k Φ` given per axis.
pub fn traction_from_gradient(ext: &ExtendedTensor, grads: &[DMatrix<f64>], normal: [f64; 3], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |p, i| {
        let mut s = 0.0;
        for (l, nl) in normal.iter().enumerate() {
            if *nl == 0.0 {
                continue;
            }
            for j in 0..n {
                for (k, g) in grads.iter().enumerate() {
                    s += nl * ext.get(l, i, j, k) * g[(p, j)];
                }
            }
        }
        s
    })
}

/// Gauss–Legendre colatitudes times uniform longitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    /// Colatitudes, ascending.
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// Quadrature weight of each `(θ, φ)` node, row-major in `θ`.
    pub weights: Vec<f64>,
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 2 || n_phi < 3 {
            return Err(Error::Domain(format!("grid {n_theta}x{n_phi} too small (need at least 2x3)")));
        }
        let (t, w) = gauss_legendre(n_theta);
        // t ascending means θ descending; flip
        let theta: Vec<f64> = t.iter().rev().map(|t| t.acos()).collect();
        let wt: Vec<f64> = w.iter().rev().copied().collect();
        let dphi = 2.0 * PI / n_phi as f64;
        let phi = (0..n_phi).map(|j| j as f64 * dphi).collect();
        let weights = wt.iter().flat_map(|w| std::iter::repeat(w * dphi).take(n_phi)).collect();
        Ok(Self { theta, phi, weights })
    }

    pub fn len(&self) -> usize {
        self.theta.len() * self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn direction(&self, k: usize) -> [f64; 3] {
        let (it, ip) = (k / self.phi.len(), k % self.phi.len());
        let (st, ct) = self.theta[it].sin_cos();
        let (sp, cp) = self.phi[ip].sin_cos();
        [st * cp, st * sp, ct]
    }

    pub fn directions(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|k| self.direction(k)).collect()
    }
}

/// Kernel values on a sphere grid at `|r| = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereField {
    pub grid: SphereGrid,
    pub field_dim: usize,
    pub values: Vec<DMatrix<f64>>,
}

impl SphereField {
    /// Sample any direction-dependent `N×N` function on the grid.
    pub fn from_fn(grid: SphereGrid, field_dim: usize, f: impl Fn([f64; 3]) -> Result<DMatrix<f64>> + Sync) -> Result<Self> {
        let values = grid.directions().par_iter().map(|&d| f(d)).collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, field_dim, values })
    }

    pub fn component(&self, i: usize, j: usize) -> Vec<f64> {
        self.values.iter().map(|m| m[(i, j)]).collect()
    }

    /// `(theta, phi, value, x, y, z)` rows with `ϱ = |value|`.
    pub fn plot_rows(&self, i: usize, j: usize) -> Vec<[f64; 6]> {
        let np = self.grid.phi.len();
        self.values
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let (th, ph) = (self.grid.theta[k / np], self.grid.phi[k % np]);
                let v = m[(i, j)];
                let d = self.grid.direction(k);
                let rho = v.abs();
                [th, ph, v, rho * d[0], rho * d[1], rho * d[2]]
            })
            .collect()
    }

    pub fn write_csv(&self, i: usize, j: usize, out: &mut impl Write) -> Result<()> {
        writeln!(out, "theta,phi,value,x,y,z")?;
        for row in self.plot_rows(i, j) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Evaluate `table` on the grid at unit distance.
pub fn sample_sphere(table: &CoeffTable, n_theta: usize, n_phi: usize) -> Result<SphereField> {
    let grid = SphereGrid::new(n_theta, n_phi)?;
    let values = evaluate_batch(table, &grid.directions())?.into_iter().map(|v| v.matrix).collect();
    Ok(SphereField {
        grid,
        field_dim: table.field_dim(),
        values,
    })
}

/// Wavefront OBJ mesh of the spherical plot of component `(i, j)`; the poles
/// are closed with vertices evaluated there.
pub fn plot_mesh_obj(table: &CoeffTable, field: &SphereField, i: usize, j: usize) -> Result<String> {
    let grid = &field.grid;
    let (nt, np) = (grid.theta.len(), grid.phi.len());
    let mut s = String::new();
    let _ = writeln!(s, "# spherical plot of component ({},{}), order {}", i + 1, j + 1, table.multi_index());
    let north = evaluate(table, [0.0, 0.0, 1.0])?.matrix[(i, j)].abs();
    let south = evaluate(table, [0.0, 0.0, -1.0])?.matrix[(i, j)].abs();
    let _ = writeln!(s, "v 0 0 {north:.16e}");
    for row in field.plot_rows(i, j) {
        let _ = writeln!(s, "v {:.16e} {:.16e} {:.16e}", row[3], row[4], row[5]);
    }
    let _ = writeln!(s, "v 0 0 {:.16e}", -south);
    // OBJ indices are 1-based; vertex 1 is the north pole
    let v = |it: usize, ip: usize| 2 + it * np + (ip % np);
    let south_idx = 2 + nt * np;
    for ip in 0..np {
        let _ = writeln!(s, "f 1 {} {}", v(0, ip), v(0, ip + 1));
    }
    for it in 0..nt - 1 {
        for ip in 0..np {
            let (a, b, c, d) = (v(it, ip), v(it, ip + 1), v(it + 1, ip + 1), v(it + 1, ip));
            let _ = writeln!(s, "f {a} {d} {c}");
            let _ = writeln!(s, "f {a} {c} {b}");
        }
    }
    for ip in 0..np {
        let _ = writeln!(s, "f {south_idx} {} {}", v(nt - 1, ip + 1), v(nt - 1, ip));
    }
    Ok(s)
}

pub fn write_plot_files(
    table: &CoeffTable,
    field: &SphereField,
    i: usize,
    j: usize,
    csv_path: &Path,
    obj_path: Option<&Path>,
) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(csv_path)?);
    field.write_csv(i, j, &mut f)?;
    f.flush()?;
    if let Some(p) = obj_path {
        std::fs::write(p, plot_mesh_obj(table, field, i, j)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{base_coefficients, build_tables, derive_multi};
    use crate::materials::{builtin, MaterialConstants};
    use crate::quadrature::SphereQuadrature;

    fn laplace(order_target: MultiIndex) -> CoeffTable {
        let ext = MaterialConstants::laplace().extend().unwrap();
        let deg = 4 + order_target.order() as usize;
        let base = base_coefficients(&ext, deg, &SphereQuadrature::new(deg + 12)).unwrap();
        derive_multi(&base, order_target).unwrap()
    }

    #[test]
    fn laplace_examples() {
        let phi = evaluate(&laplace(MultiIndex::ZERO), [0.0, 0.0, 2.0]).unwrap();
        assert!((phi.matrix[(0, 0)] - 1.0 / (8.0 * PI)).abs() < 1e-15);
        let d112 = evaluate(&laplace(MultiIndex::new(2, 1, 0)), [0.0, 1.0, 0.0]).unwrap();
        assert!((d112.matrix[(0, 0)] - 3.0 / (4.0 * PI)).abs() < 1e-13, "{}", d112.matrix[(0, 0)]);
        assert!(d112.imag_residual < 1e-12);
    }

    #[test]
    fn kelvin_example() {
        let ext = MaterialConstants::isotropic_elastic(1.0, 0.3).unwrap().extend().unwrap();
        let base = base_coefficients(&ext, 4, &SphereQuadrature::new(30)).unwrap();
        let v = evaluate(&base, [1.0, 0.0, 0.0]).unwrap();
        assert!((v.matrix[(0, 0)] - 2.8 / (16.0 * PI * 0.7)).abs() < 1e-13);
    }

    #[test]
    fn batch_examples() {
        let t = laplace(MultiIndex::ZERO);
        let r = [0.3, -0.4, 1.2];
        let pts = [r, r.map(|x| 2.0 * x), r.map(|x| 3.0 * x)];
        let vals = evaluate_batch(&t, &pts).unwrap();
        assert!((vals[0].matrix[(0, 0)] / vals[2].matrix[(0, 0)] - 3.0).abs() < 1e-14);
        assert!(evaluate_batch(&t, &[]).unwrap().is_empty());
        let err = evaluate_batch(&t, &[r, [0.0; 3]]).unwrap_err();
        assert!(matches!(err, Error::ZeroDistance { index: Some(1) }));
        assert!(matches!(evaluate(&t, [0.0; 3]), Err(Error::ZeroDistance { index: None })));
    }

    #[test]
    fn degree_below_order_is_range_error() {
        let t = laplace(MultiIndex::new(1, 1, 0)).truncated(1);
        assert!(matches!(evaluate(&t, [1.0, 0.0, 0.0]), Err(Error::Range(_))));
    }

    #[test]
    fn traction_laplace() {
        let ext = MaterialConstants::laplace().extend().unwrap();
        let tabs = build_tables(&ext, 3, 1, None).unwrap();
        let t = traction_kernel(&ext, [&tabs[1], &tabs[2], &tabs[3]], [0.0, 0.0, 2.0], [0.0, 0.0, 1.0]).unwrap();
        assert!((t[(0, 0)] + 1.0 / (16.0 * PI)).abs() < 1e-15);
        let t = traction_kernel(&ext, [&tabs[1], &tabs[2], &tabs[3]], [0.0, 0.0, 2.0], [1.0, 0.0, 0.0]).unwrap();
        assert!(t[(0, 0)].abs() < 1e-16);
        let cu = builtin("Cu").unwrap().extend().unwrap();
        assert!(matches!(
            traction_kernel(&cu, [&tabs[1], &tabs[2], &tabs[3]], [0.0, 0.0, 2.0], [0.0, 0.0, 1.0]),
            Err(Error::Consistency(_))
        ));
        assert!(matches!(
            traction_kernel(&ext, [&tabs[2], &tabs[1], &tabs[3]], [0.0, 0.0, 2.0], [0.0, 0.0, 1.0]),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn sphere_sampling() {
        let t = laplace(MultiIndex::ZERO);
        let f = sample_sphere(&t, 8, 16).unwrap();
        assert_eq!(f.values.len(), 128);
        for row in f.plot_rows(0, 0) {
            assert!((row[2] - 1.0 / (4.0 * PI)).abs() < 1e-15);
            let rad = (row[3] * row[3] + row[4] * row[4] + row[5] * row[5]).sqrt();
            assert!((rad - 1.0 / (4.0 * PI)).abs() < 1e-15);
        }
        let w: f64 = f.grid.weights.iter().sum();
        assert!((w - 4.0 * PI).abs() < 1e-12);
        assert!(SphereGrid::new(1, 8).is_err());
        assert!(SphereGrid::new(4, 2).is_err());
        let obj = plot_mesh_obj(&t, &f, 0, 0).unwrap();
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 130);
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 2 * 16 + 2 * 7 * 16);
    }
}

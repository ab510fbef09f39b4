//! Reference values independent of the series: closed forms for the Laplace
//! and Kelvin kernels, the unit-circle contour integral, finite differences,
//! and the error measures over the unit sphere.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::evaluator::SphereField;
use crate::expansion::MultiIndex;
use crate::materials::ExtendedTensor;
use crate::symbol::SymbolInverter;

fn norm3(r: &[f64; 3]) -> f64 {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
}

fn nonzero(r: &[f64; 3]) -> Result<f64> {
    let d = norm3(r);
    if !(d > 0.0) {
        return Err(Error::ZeroDistance { index: None });
    }
    Ok(d)
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// `∂^mi (1/(4π r))` for total order up to 3.
pub fn laplace_closed(mi: MultiIndex, r: [f64; 3]) -> Result<f64> {
    let d = nonzero(&r)?;
    let mut axes = Vec::new();
    for (a, &n) in mi.0.iter().enumerate() {
        axes.extend(std::iter::repeat(a).take(n as usize));
    }
    let x = r;
    let v = match axes.as_slice() {
        [] => 1.0 / d,
        &[i] => -x[i] / d.powi(3),
        &[i, j] => (3.0 * x[i] * x[j] - d * d * delta(i, j)) / d.powi(5),
        &[i, j, k] => {
            -15.0 * x[i] * x[j] * x[k] / d.powi(7)
                + 3.0 * (delta(i, j) * x[k] + delta(i, k) * x[j] + delta(j, k) * x[i]) / d.powi(5)
        }
        _ => {
            return Err(Error::UnsupportedOracle(format!(
                "Laplace closed form available up to order 3, not {mi}"
            )))
        }
    };
    Ok(v / (4.0 * PI))
}

fn check_isotropic(mu: f64, nu: f64) -> Result<()> {
    if !(mu > 0.0) || !(nu > -1.0 && nu < 0.5) {
        return Err(Error::Domain(format!("isotropic constants out of range: mu = {mu}, nu = {nu}")));
    }
    Ok(())
}

/// Full Kelvin kernel `[(3 − 4ν) δ_ij + r̂_i r̂_j] / (16π μ (1 − ν) r)`.
pub fn kelvin_tensor(mu: f64, nu: f64, r: [f64; 3]) -> Result<DMatrix<f64>> {
    check_isotropic(mu, nu)?;
    let d = nonzero(&r)?;
    let c = 16.0 * PI * mu * (1.0 - nu) * d;
    let h = r.map(|x| x / d);
    Ok(DMatrix::from_fn(3, 3, |i, j| ((3.0 - 4.0 * nu) * delta(i, j) + h[i] * h[j]) / c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KelvinComponent {
    Phi11,
    /// `∂⁴Φ₁₁ / ∂r₁² ∂r₂ ∂r₃`
    Phi11_1123,
}

/// Selected Kelvin components in closed form.
pub fn kelvin_closed(mu: f64, nu: f64, which: KelvinComponent, r: [f64; 3]) -> Result<f64> {
    check_isotropic(mu, nu)?;
    let d = nonzero(&r)?;
    let h = r.map(|x| x / d);
    let c = 16.0 * PI * mu * (1.0 - nu);
    Ok(match which {
        KelvinComponent::Phi11 => (3.0 - 4.0 * nu + h[0] * h[0]) / (c * d),
        KelvinComponent::Phi11_1123 => {
            let h1 = h[0] * h[0];
            -15.0 * (1.0 - 4.0 * nu + 14.0 * (1.0 + 2.0 * nu) * h1 - 63.0 * h1 * h1) * h[1] * h[2] / (c * d.powi(5))
        }
    })
}

/// Orthonormal `(e₁, e₂)` spanning the plane `ξ · r̂ = 0`: `e₁` is the axis
/// of the smallest `|r̂_k|` crossed with `r̂`, `e₂ = r̂ × e₁`.
pub fn circle_frame(rhat: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let mut k = 0;
    for a in 1..3 {
        if rhat[a].abs() < rhat[k].abs() {
            k = a;
        }
    }
    let mut axis = [0.0; 3];
    axis[k] = 1.0;
    let e1 = cross(axis, rhat);
    let n = norm3(&e1);
    let e1 = e1.map(|x| x / n);
    let e2 = cross(rhat, e1);
    (e1, e2)
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Unit-circle contour integral.
///
/// Order 0: `Φ(r) = 1/(8π² r) ∮ [L*(ξ̂)]⁻¹ dψ`.
/// Order 1 along `axis`: `Φ_{,α}(r) = −1/(8π² r²) ∮ ∂_s([L*]⁻¹ ξ̂_α) dψ`,
/// with `∂_s` the derivative as the circle tilts toward `r̂`
/// (`ξ̂ → ξ̂ + s r̂`), i.e. `−Φ̃ (∂_s L*) Φ̃ ξ̂_α + Φ̃ r̂_α`.
pub fn unit_circle(ext: &ExtendedTensor, r: [f64; 3], order: u32, axis: Option<usize>, n_nodes: usize) -> Result<DMatrix<f64>> {
    if n_nodes < 16 {
        return Err(Error::Domain(format!("contour needs at least 16 nodes, got {n_nodes}")));
    }
    let d = nonzero(&r)?;
    let rhat = r.map(|x| x / d);
    let (e1, e2) = circle_frame(rhat);
    let inverter = SymbolInverter::new(ext);
    let n = ext.field_dim();
    let dpsi = 2.0 * PI / n_nodes as f64;
    let node = |j: usize| {
        let (s, c) = (j as f64 * dpsi).sin_cos();
        [c * e1[0] + s * e2[0], c * e1[1] + s * e2[1], c * e1[2] + s * e2[2]]
    };
    let mut acc = DMatrix::zeros(n, n);
    match (order, axis) {
        (0, _) => {
            for j in 0..n_nodes {
                acc += inverter.invert(&node(j))?;
            }
            Ok(acc * (dpsi / (8.0 * PI * PI * d)))
        }
        (1, Some(alpha)) if (1..=3).contains(&alpha) => {
            let a = alpha - 1;
            for j in 0..n_nodes {
                let xi = node(j);
                let inv = inverter.invert(&xi)?;
                let dl = DMatrix::from_fn(n, n, |jj, kk| {
                    let mut s = 0.0;
                    for i in 0..3 {
                        for l in 0..3 {
                            s += ext.get(i, jj, kk, l) * (rhat[i] * xi[l] + xi[i] * rhat[l]);
                        }
                    }
                    s
                });
                let dinv = -(&inv * dl * &inv);
                acc += dinv * xi[a] + inv * rhat[a];
            }
            Ok(acc * (-dpsi / (8.0 * PI * PI * d * d)))
        }
        (1, _) => Err(Error::Domain("first-order contour integral needs an axis 1, 2 or 3".into())),
        _ => Err(Error::UnsupportedOracle(format!("contour integral of order {order}"))),
    }
}

/// Central difference along `axis` (1–3) with one Richardson step,
/// `(4 D(h/2) − D(h)) / 3`.
pub fn finite_diff(
    f: impl Fn([f64; 3]) -> Result<DMatrix<f64>>,
    r: [f64; 3],
    axis: usize,
    h: f64,
) -> Result<DMatrix<f64>> {
    if !(1..=3).contains(&axis) {
        return Err(Error::Domain(format!("axis must be 1, 2 or 3, got {axis}")));
    }
    if !(h > 0.0) || !(norm3(&r) > 4.0 * h) {
        return Err(Error::Domain(format!("step {h} too large for |r| = {}", norm3(&r))));
    }
    let central = |step: f64| -> Result<DMatrix<f64>> {
        let (mut p, mut m) = (r, r);
        p[axis - 1] += step;
        m[axis - 1] -= step;
        Ok((f(p)? - f(m)?) / (2.0 * step))
    };
    let coarse = central(h)?;
    let fine = central(h / 2.0)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// Contour values for any multi-index of order ≤ 2; the second order is a
/// Richardson finite difference of the first-order contour integral.
pub fn contour_derivative(ext: &ExtendedTensor, mi: MultiIndex, r: [f64; 3], n_nodes: usize, h: f64) -> Result<DMatrix<f64>> {
    let seq = mi.axis_sequence();
    match seq.as_slice() {
        [] => unit_circle(ext, r, 0, None, n_nodes),
        &[a] => unit_circle(ext, r, 1, Some(a), n_nodes),
        &[a, b] => finite_diff(|p| unit_circle(ext, p, 1, Some(a), n_nodes), r, b, h),
        _ => Err(Error::UnsupportedOracle(format!("no contour oracle for order {}", mi.order()))),
    }
}

/// Sphere error measures of a test field against a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// `e_S1` per component `(i, j)`.
    pub e_s1: DMatrix<f64>,
    /// `Δ = (test − ref) / ‖ref‖_S1` per grid node.
    pub delta_field: Vec<DMatrix<f64>>,
    pub truncation: usize,
    pub oracle_id: String,
}

impl ErrorReport {
    pub fn max_e_s1(&self) -> f64 {
        self.e_s1.iter().fold(0.0f64, |a, &v| a.max(v))
    }

    /// `L,i,j,e_S1` rows with 1-based components.
    pub fn write_csv(&self, out: &mut impl Write, header: bool) -> Result<()> {
        if header {
            writeln!(out, "L,i,j,e_S1")?;
        }
        let n = self.e_s1.nrows();
        for i in 0..n {
            for j in 0..n {
                writeln!(out, "{},{},{},{:.16e}", self.truncation, i + 1, j + 1, self.e_s1[(i, j)])?;
            }
        }
        Ok(())
    }
}

/// `e_S1 = ∫|test − ref| / ∫|ref|` per component with the grid's weights.
/// Components whose reference vanishes identically report the absolute
/// integral instead.
pub fn error_over_sphere(test: &SphereField, reference: &SphereField, truncation: usize, oracle_id: &str) -> Result<ErrorReport> {
    if test.grid != reference.grid || test.field_dim != reference.field_dim || test.values.len() != reference.values.len() {
        return Err(Error::Shape("test and reference fields are sampled on different grids".into()));
    }
    let n = test.field_dim;
    let w = &test.grid.weights;
    let mut num = DMatrix::zeros(n, n);
    let mut den = DMatrix::zeros(n, n);
    for ((t, r), &wk) in test.values.iter().zip(&reference.values).zip(w) {
        for i in 0..n {
            for j in 0..n {
                num[(i, j)] += wk * (t[(i, j)] - r[(i, j)]).abs();
                den[(i, j)] += wk * r[(i, j)].abs();
            }
        }
    }
    let norm = den.map(|v: f64| if v > 0.0 { v } else { 1.0 });
    let e_s1 = num.component_div(&norm);
    let delta_field = test
        .values
        .iter()
        .zip(&reference.values)
        .map(|(t, r)| (t - r).component_div(&norm))
        .collect();
    Ok(ErrorReport {
        e_s1,
        delta_field,
        truncation,
        oracle_id: oracle_id.to_string(),
    })
}

/// Contour reference sampled on a grid (orders 0–2 via [`contour_derivative`]).
pub fn contour_field(
    ext: &ExtendedTensor,
    grid: &crate::evaluator::SphereGrid,
    mi: MultiIndex,
    n_nodes: usize,
) -> Result<SphereField> {
    SphereField::from_fn(grid.clone(), ext.field_dim(), |d| contour_derivative(ext, mi, d, n_nodes, 1e-3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::SphereGrid;
    use crate::materials::{builtin, MaterialConstants};

    #[test]
    fn laplace_closed_examples() {
        assert!((laplace_closed(MultiIndex::ZERO, [0.0, 0.6, 0.8]).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-16);
        assert!((laplace_closed(MultiIndex::new(1, 0, 0), [1.0, 0.0, 0.0]).unwrap() + 1.0 / (4.0 * PI)).abs() < 1e-16);
        let s = 0.5f64.sqrt();
        assert!((laplace_closed(MultiIndex::new(1, 1, 0), [s, s, 0.0]).unwrap() - 3.0 / (8.0 * PI)).abs() < 1e-15);
        assert!(matches!(
            laplace_closed(MultiIndex::new(2, 2, 0), [1.0, 0.0, 0.0]),
            Err(Error::UnsupportedOracle(_))
        ));
        // closed form 3 r̂₂(1 − 5 r̂₁²)/(4π r⁴)
        let r = [0.3, -0.5, 0.9];
        let d = norm3(&r);
        let expect = 3.0 * r[1] / d * (1.0 - 5.0 * (r[0] / d).powi(2)) / (4.0 * PI * d.powi(4));
        assert!((laplace_closed(MultiIndex::new(2, 1, 0), r).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn kelvin_examples() {
        let v = kelvin_closed(1.0, 0.3, KelvinComponent::Phi11, [1.0, 0.0, 0.0]).unwrap();
        assert!((v - 0.07957747155).abs() < 1e-10);
        let v = kelvin_closed(1.0, 0.25, KelvinComponent::Phi11, [0.0, 0.0, 1.0]).unwrap();
        assert!((v - 1.0 / (6.0 * PI)).abs() < 1e-15);
        assert_eq!(kelvin_closed(1.0, 0.3, KelvinComponent::Phi11_1123, [0.3, 0.0, 0.4]).unwrap(), 0.0);
        assert!(kelvin_closed(1.0, 0.5, KelvinComponent::Phi11, [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn kelvin_fourth_derivative_by_differences() {
        // nested Richardson differences of Φ₁₁ as an independent check of the sign
        let phi = |p: [f64; 3]| kelvin_closed(1.0, 0.3, KelvinComponent::Phi11, p).map(|v| DMatrix::from_element(1, 1, v));
        let r = [0.5, 0.6, 0.7];
        let h = 0.02;
        let d = finite_diff(
            |p| {
                finite_diff(
                    |q| finite_diff(|s| finite_diff(phi, s, 1, h), q, 1, h),
                    p,
                    2,
                    h,
                )
            },
            r,
            3,
            h,
        )
        .unwrap()[(0, 0)];
        let exact = kelvin_closed(1.0, 0.3, KelvinComponent::Phi11_1123, r).unwrap();
        assert!((d - exact).abs() < 1e-4 * exact.abs(), "{d} vs {exact}");
    }

    #[test]
    fn contour_laplace_and_kelvin() {
        let lap = MaterialConstants::laplace().extend().unwrap();
        let r = [0.3, 1.1, -0.4];
        let v = unit_circle(&lap, r, 0, None, 16).unwrap();
        assert!((v[(0, 0)] - 1.0 / (4.0 * PI * norm3(&r))).abs() < 1e-16);
        for a in 1..=3 {
            let g = unit_circle(&lap, r, 1, Some(a), 16).unwrap();
            let e = laplace_closed(MultiIndex::ZERO.raised(a), r).unwrap();
            assert!((g[(0, 0)] - e).abs() < 1e-15);
        }
        let (mu, nu) = (1.0, 0.3);
        let iso = MaterialConstants::isotropic_elastic(mu, nu).unwrap().extend().unwrap();
        let v = unit_circle(&iso, r, 0, None, 256).unwrap();
        let k = kelvin_tensor(mu, nu, r).unwrap();
        assert!((v - &k).abs().max() <= 1e-13 * k.abs().max());
        let g = unit_circle(&iso, r, 1, Some(2), 256).unwrap();
        let fd = finite_diff(|p| kelvin_tensor(mu, nu, p), r, 2, 1e-3).unwrap();
        assert!((g - &fd).abs().max() <= 1e-9 * fd.abs().max());
        assert!(unit_circle(&iso, r, 0, None, 8).is_err());
        assert!(unit_circle(&iso, r, 1, None, 64).is_err());
    }

    #[test]
    fn contour_converges_for_copper() {
        let cu = builtin("Cu").unwrap().extend().unwrap();
        let a = unit_circle(&cu, [1.0, 1.0, 1.0], 0, None, 128).unwrap();
        let b = unit_circle(&cu, [1.0, 1.0, 1.0], 0, None, 512).unwrap();
        assert!((a - &b).abs().max() <= 1e-12 * b.abs().max());
    }

    #[test]
    fn finite_diff_examples() {
        let f = |p: [f64; 3]| laplace_closed(MultiIndex::ZERO, p).map(|v| DMatrix::from_element(1, 1, v));
        let d = finite_diff(f, [2.0, 0.0, 0.0], 1, 1e-3).unwrap();
        assert!((d[(0, 0)] + 1.0 / (16.0 * PI)).abs() < 1e-9);
        let sym = finite_diff(f, [0.0, 0.0, 2.0], 1, 1e-3).unwrap();
        assert!(sym[(0, 0)].abs() < 1e-12);
        assert!(finite_diff(f, [0.01, 0.0, 0.0], 1, 1e-2).is_err());
    }

    #[test]
    fn error_examples() {
        let grid = SphereGrid::new(6, 12).unwrap();
        let reference = SphereField::from_fn(grid.clone(), 1, |d| Ok(DMatrix::from_element(1, 1, 1.0 + d[2]))).unwrap();
        let same = error_over_sphere(&reference, &reference, 0, "self").unwrap();
        assert_eq!(same.max_e_s1(), 0.0);
        let mut doubled = reference.clone();
        doubled.values.iter_mut().for_each(|m| *m *= 2.0);
        let e = error_over_sphere(&reference, &doubled, 0, "x2").unwrap();
        assert!((e.e_s1[(0, 0)] - 0.5).abs() < 1e-14);
        let other = SphereField::from_fn(SphereGrid::new(6, 13).unwrap(), 1, |_| Ok(DMatrix::from_element(1, 1, 1.0))).unwrap();
        assert!(matches!(error_over_sphere(&reference, &other, 0, "bad"), Err(Error::Shape(_))));
        let mut csv = Vec::new();
        e.write_csv(&mut csv, true).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("L,i,j,e_S1\n0,1,1,"));
    }
}

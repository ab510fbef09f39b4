use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rayon::prelude::*;

use super::{lm_count, lm_index, CoeffTable, MultiIndex};
use crate::error::{Error, Result};
use crate::materials::ExtendedTensor;
use crate::quadrature::SphereQuadrature;
use crate::special::{clebsch_gordan, NormalizedLegendre};
use crate::symbol::SymbolInverter;

/// Quadrature exactness used when none is given.
///
/// The inverse symbol is not band-limited, so the rule must resolve well past
/// the projected degree or aliasing sets the error floor; with this margin
/// the aliasing error of strongly anisotropic crystals stays below the
/// truncation error.
pub fn default_quad_degree(degree: usize) -> usize {
    2 * degree + 32
}

/// Projections of `ξ̂^mi [L*(ξ̂)]⁻¹` onto `conj(Y_ℓ^m)`, `ℓ ≤ degree`.
pub fn moment_coefficients(
    ext: &ExtendedTensor,
    mi: MultiIndex,
    degree: usize,
    quad: &SphereQuadrature,
) -> Result<CoeffTable> {
    if quad.exactness_degree() < degree {
        return Err(Error::Range(format!(
            "quadrature exactness {} is below the requested degree {degree}",
            quad.exactness_degree()
        )));
    }
    let n = ext.field_dim();
    let nn = n * n;
    let n_phi = quad.n_phi;
    let inverter = SymbolInverter::new(ext);
    let (cos_tab, sin_tab): (Vec<f64>, Vec<f64>) = (0..n_phi)
        .map(|j| {
            let (s, c) = quad.phi(j).sin_cos();
            (c, s)
        })
        .unzip();

    let ring_terms: Vec<Vec<Complex64>> = (0..quad.n_theta())
        .into_par_iter()
        .map(|k| -> Result<Vec<Complex64>> {
            let mut samples = vec![0.0; n_phi * nn];
            for j in 0..n_phi {
                let x = quad.node(k, j);
                let inv = inverter.invert(&x)?;
                let w = x[0].powi(mi.0[0] as i32) * x[1].powi(mi.0[1] as i32) * x[2].powi(mi.0[2] as i32);
                for a in 0..n {
                    for b in 0..n {
                        samples[j * nn + a * n + b] = w * inv[(a, b)];
                    }
                }
            }
            let legendre = NormalizedLegendre::new(degree, quad.ring_cos[k]);
            let scale = quad.ring_weights[k] * quad.dphi();
            let mut out = vec![Complex64::new(0.0, 0.0); lm_count(degree) * nn];
            let mut g = vec![Complex64::new(0.0, 0.0); nn];
            for m in 0..=degree {
                g.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                for j in 0..n_phi {
                    let idx = (m * j) % n_phi;
                    let e = Complex64::new(cos_tab[idx], -sin_tab[idx]);
                    for (gz, &f) in g.iter_mut().zip(&samples[j * nn..(j + 1) * nn]) {
                        *gz += e * f;
                    }
                }
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                for l in m..=degree {
                    let c = legendre.get(l, m) * scale;
                    let pos = lm_index(l, m as i32) * nn;
                    let neg = lm_index(l, -(m as i32)) * nn;
                    for q in 0..nn {
                        out[pos + q] = g[q] * c;
                        if m > 0 {
                            out[neg + q] = g[q].conj() * (c * sign);
                        }
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    // fixed summation order keeps builds bit-reproducible
    let mut entries = vec![Complex64::new(0.0, 0.0); lm_count(degree) * nn];
    for ring in &ring_terms {
        for (e, r) in entries.iter_mut().zip(ring) {
            *e += r;
        }
    }
    CoeffTable::from_entries(ext.material_hash(), n, degree, mi, entries)
}

/// Coefficients of `[L*(ξ̂)]⁻¹` itself, both parities, `ℓ ≤ degree`.
pub fn base_coefficients(ext: &ExtendedTensor, degree: usize, quad: &SphereQuadrature) -> Result<CoeffTable> {
    moment_coefficients(ext, MultiIndex::ZERO, degree, quad)
}

/// Coefficients of `ξ̂_axis` times the source function, one degree fewer.
///
/// Writing `ξ̂₃ = √(4π/3) Y₁⁰` and `ξ̂₁, ξ̂₂` through `Y₁^{±1}`, the
/// Clebsch–Gordan product series gives
/// `S_μ^{ℓm} = Σ_{k=ℓ±1} √((2k+1)/(2ℓ+1)) ⟨1 k 0 0|ℓ 0⟩ ⟨1 k μ m−μ|ℓ m⟩ E^{k,m−μ}`
/// and then `ξ̂₁ → (S₋₁ − S₊₁)/√2`, `ξ̂₂ → i(S₋₁ + S₊₁)/√2`, `ξ̂₃ → S₀`.
pub fn derive_coefficients(table: &CoeffTable, axis: usize) -> Result<CoeffTable> {
    if !(1..=3).contains(&axis) {
        return Err(Error::Domain(format!("axis must be 1, 2 or 3, got {axis}")));
    }
    if !table.full_parity() {
        return Err(Error::Range(
            "table holds a single parity of degrees; derivative tables need a full-parity source".into(),
        ));
    }
    if table.degree() == 0 {
        return Err(Error::Range(format!(
            "source of order {} has degree 0; build the base table to at least L + I",
            table.order()
        )));
    }
    let n = table.field_dim();
    let nn = n * n;
    let degree = table.degree() - 1;
    let mut entries = vec![Complex64::new(0.0, 0.0); lm_count(degree) * nn];
    let mut s = vec![[Complex64::new(0.0, 0.0); 3]; nn];
    for l in 0..=degree {
        let li = l as i32;
        for m in -li..=li {
            s.iter_mut().for_each(|v| *v = [Complex64::new(0.0, 0.0); 3]);
            for (slot, mu) in (-1i32..=1).enumerate() {
                let mp = m - mu;
                for k in [l.wrapping_sub(1), l + 1] {
                    if k > table.degree() || mp.unsigned_abs() as usize > k {
                        continue;
                    }
                    let (ku, lu) = (k as u32, l as u32);
                    let c = (((2 * k + 1) as f64) / ((2 * l + 1) as f64)).sqrt()
                        * clebsch_gordan(1, ku, lu, 0, 0, 0)
                        * clebsch_gordan(1, ku, lu, mu, mp, m);
                    if c == 0.0 {
                        continue;
                    }
                    for (acc, e) in s.iter_mut().zip(table.block(k, mp)) {
                        acc[slot] += e * c;
                    }
                }
            }
            let out = &mut entries[lm_index(l, m) * nn..(lm_index(l, m) + 1) * nn];
            for (o, v) in out.iter_mut().zip(&s) {
                *o = match axis {
                    1 => (v[0] - v[2]) * FRAC_1_SQRT_2,
                    2 => (v[0] + v[2]) * Complex64::new(0.0, FRAC_1_SQRT_2),
                    _ => v[1],
                };
            }
        }
    }
    CoeffTable::from_entries(table.material_hash(), n, degree, table.multi_index().raised(axis), entries)
}

/// Apply the recurrence along axis 1, then 2, then 3 until `target` is reached.
pub fn derive_multi(base: &CoeffTable, target: MultiIndex) -> Result<CoeffTable> {
    let from = base.multi_index();
    if (0..3).any(|a| target.0[a] < from.0[a]) {
        return Err(Error::Domain(format!("cannot reach multi-index {target} from {from}")));
    }
    let steps = MultiIndex([target.0[0] - from.0[0], target.0[1] - from.0[1], target.0[2] - from.0[2]]);
    if (base.degree() as u32) < steps.order() {
        return Err(Error::Range(format!(
            "base table of degree {} cannot yield order {}; build it to at least L + {}",
            base.degree(),
            target.order(),
            steps.order()
        )));
    }
    let mut t = base.clone();
    for axis in steps.axis_sequence() {
        t = derive_coefficients(&t, axis)?;
    }
    Ok(t)
}

/// Base table to degree `l + max_order`, then every multi-index of total
/// order `≤ max_order`, each truncated to `l`. Ordered as
/// [`MultiIndex::all_up_to`].
pub fn build_tables(
    ext: &ExtendedTensor,
    l: usize,
    max_order: u32,
    quad_degree: Option<usize>,
) -> Result<Vec<CoeffTable>> {
    Ok(build_tables_timed(ext, l, max_order, quad_degree)?.into_iter().map(|(t, _)| t).collect())
}

/// [`build_tables`] with the time spent on each table: quadrature for the
/// base, one recurrence step for every derived table.
pub fn build_tables_timed(
    ext: &ExtendedTensor,
    l: usize,
    max_order: u32,
    quad_degree: Option<usize>,
) -> Result<Vec<(CoeffTable, Duration)>> {
    let base_degree = l + max_order as usize;
    let start = Instant::now();
    let quad = SphereQuadrature::new(quad_degree.unwrap_or_else(|| default_quad_degree(base_degree)));
    let base = base_coefficients(ext, base_degree, &quad)?;
    let mut memo: HashMap<MultiIndex, (CoeffTable, Duration)> = HashMap::new();
    memo.insert(MultiIndex::ZERO, (base, start.elapsed()));
    let targets = MultiIndex::all_up_to(max_order);
    for &mi in &targets {
        if memo.contains_key(&mi) {
            continue;
        }
        // parent drops the last step of the canonical axis sequence
        let seq = mi.axis_sequence();
        let last = *seq.last().expect("nonzero multi-index");
        let mut parent = mi;
        parent.0[last - 1] -= 1;
        let start = Instant::now();
        let derived = derive_coefficients(&memo[&parent].0, last)?;
        memo.insert(mi, (derived, start.elapsed()));
    }
    Ok(targets
        .iter()
        .map(|mi| {
            let (t, d) = &memo[mi];
            (t.truncated(l), *d)
        })
        .collect())
}

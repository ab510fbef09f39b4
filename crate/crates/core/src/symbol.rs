//! The operator symbol `L*_JK(ξ) = c_iJKl ξ_i ξ_l`, its inverse and an
//! ellipticity report.
//!
//! Multi-field symbols mix stiffness-sized and permittivity-sized entries
//! (1e10 against 1e−9), so inversion works on `D L D` with `D` diagonal,
//! one scale per field, and maps back with `D (D L D)⁻¹ D`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::materials::ExtendedTensor;

/// Condition number (of the scaled symbol) beyond which it counts as singular.
pub const SINGULAR_CONDITION: f64 = 1e14;

/// A direction on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitDirection([f64; 3]);

impl UnitDirection {
    /// Accepts only vectors already of unit length (within 1e−14).
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if (n2 - 1.0).abs() > 2e-14 {
            return Err(Error::Domain(format!("|v|^2 = {n2} is not 1")));
        }
        Ok(Self(v))
    }

    pub fn normalize(v: [f64; 3]) -> Result<Self> {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Domain("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(Self([v[0] / n, v[1] / n, v[2] / n]))
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }
}

impl From<UnitDirection> for [f64; 3] {
    fn from(d: UnitDirection) -> Self {
        d.0
    }
}

/// `L*_JK(ξ)`. `ξ` need not be a unit vector; the result is quadratic in it.
pub fn symbol_matrix(ext: &ExtendedTensor, xi: &[f64; 3]) -> DMatrix<f64> {
    let n = ext.field_dim();
    let mut out = DMatrix::zeros(n, n);
    let mut w = [[0.0; 3]; 3];
    for i in 0..3 {
        for l in 0..3 {
            w[i][l] = xi[i] * xi[l];
        }
    }
    for jj in 0..n {
        for kk in 0..n {
            let mut s = 0.0;
            for i in 0..3 {
                for l in 0..3 {
                    s += ext.get(i, jj, kk, l) * w[i][l];
                }
            }
            out[(jj, kk)] = s;
        }
    }
    out
}

/// Per-field scales `d_J` equilibrating the magnitude matrix
/// `M_JK = (Σ_il c_iJKl²)^{1/2}` so that `max_K d_J M_JK d_K = 1` for every `J`
/// (symmetric Ruiz iteration).
pub fn field_scales(ext: &ExtendedTensor) -> Vec<f64> {
    let n = ext.field_dim();
    let mag: Vec<f64> = (0..n * n)
        .map(|jk| {
            let (jj, kk) = (jk / n, jk % n);
            let mut s = 0.0;
            for i in 0..3 {
                for l in 0..3 {
                    s += ext.get(i, jj, kk, l).powi(2);
                }
            }
            s.sqrt()
        })
        .collect();
    let mut d = vec![1.0; n];
    for _ in 0..64 {
        let mut done = true;
        for j in 0..n {
            let row = (0..n).fold(0.0f64, |a, k| a.max(d[j] * mag[j * n + k] * d[k]));
            if row > 0.0 {
                let f = 1.0 / row.sqrt();
                if (f - 1.0).abs() > 1e-3 {
                    done = false;
                }
                d[j] *= f;
            }
        }
        if done {
            break;
        }
    }
    d
}

/// Inverts symbols of one material; keeps the field scales around.
#[derive(Debug, Clone)]
pub struct SymbolInverter<'a> {
    ext: &'a ExtendedTensor,
    scales: Vec<f64>,
}

/// Eigen-decomposition of a scaled symbol, with its inverse mapped back.
#[derive(Debug, Clone)]
pub struct InvertedSymbol {
    pub inverse: DMatrix<f64>,
    /// Eigenvalues of the scaled symbol `D L D`.
    pub scaled_eigenvalues: Vec<f64>,
    pub condition: f64,
}

impl<'a> SymbolInverter<'a> {
    pub fn new(ext: &'a ExtendedTensor) -> Self {
        Self {
            ext,
            scales: field_scales(ext),
        }
    }

    pub fn invert_full(&self, xi: &[f64; 3]) -> Result<InvertedSymbol> {
        let n = self.ext.field_dim();
        let l = symbol_matrix(self.ext, xi);
        let d = &self.scales;
        let scaled = DMatrix::from_fn(n, n, |a, b| {
            // symmetrize against round-off before the symmetric solver
            0.5 * (l[(a, b)] + l[(b, a)]) * d[a] * d[b]
        });
        let eig = SymmetricEigen::new(scaled);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for &v in eig.eigenvalues.iter() {
            lo = lo.min(v.abs());
            hi = hi.max(v.abs());
        }
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition <= SINGULAR_CONDITION) {
            return Err(Error::SingularSymbol {
                direction: *xi,
                cond: condition,
            });
        }
        let q = &eig.eigenvectors;
        let mut inverse = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += q[(a, k)] * q[(b, k)] / eig.eigenvalues[k];
                }
                let v = s * d[a] * d[b];
                inverse[(a, b)] = v;
                inverse[(b, a)] = v;
            }
        }
        Ok(InvertedSymbol {
            inverse,
            scaled_eigenvalues: eig.eigenvalues.iter().copied().collect(),
            condition,
        })
    }

    pub fn invert(&self, xi: &[f64; 3]) -> Result<DMatrix<f64>> {
        self.invert_full(xi).map(|s| s.inverse)
    }
}

/// `[L*(ξ̂)]⁻¹`.
pub fn inverse_symbol(ext: &ExtendedTensor, xi: &[f64; 3]) -> Result<DMatrix<f64>> {
    SymbolInverter::new(ext).invert(xi)
}

/// Deterministic, roughly uniform directions (Fibonacci lattice).
pub fn fibonacci_directions(count: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            [rho * phi.cos(), rho * phi.sin(), z]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticityReport {
    pub min_abs_eigenvalue: f64,
    pub max_abs_eigenvalue: f64,
    /// Smallest signed eigenvalue of the unscaled symbol; negative for
    /// piezoelectric and magneto-electro-elastic materials.
    pub min_eigenvalue: f64,
    /// Worst condition number of the scaled symbol.
    pub worst_condition: f64,
    pub worst_direction: [f64; 3],
    pub samples: usize,
}

impl EllipticityReport {
    pub fn is_invertible(&self) -> bool {
        self.worst_condition <= SINGULAR_CONDITION
    }

    pub fn is_definite(&self) -> bool {
        self.min_eigenvalue > 0.0
    }
}

/// Sample the symbol over `sample_count` directions and report its spectrum.
pub fn ellipticity_check(ext: &ExtendedTensor, sample_count: usize) -> Result<EllipticityReport> {
    if sample_count < 6 {
        return Err(Error::Domain(format!("need at least 6 samples, got {sample_count}")));
    }
    let n = ext.field_dim();
    let d = field_scales(ext);
    let mut report = EllipticityReport {
        min_abs_eigenvalue: f64::INFINITY,
        max_abs_eigenvalue: 0.0,
        min_eigenvalue: f64::INFINITY,
        worst_condition: 0.0,
        worst_direction: [0.0, 0.0, 1.0],
        samples: sample_count,
    };
    for xi in fibonacci_directions(sample_count) {
        let l = symbol_matrix(ext, &xi);
        let raw = SymmetricEigen::new(l.clone()).eigenvalues;
        for &v in raw.iter() {
            report.min_abs_eigenvalue = report.min_abs_eigenvalue.min(v.abs());
            report.max_abs_eigenvalue = report.max_abs_eigenvalue.max(v.abs());
            report.min_eigenvalue = report.min_eigenvalue.min(v);
        }
        let scaled = DMatrix::from_fn(n, n, |a, b| l[(a, b)] * d[a] * d[b]);
        let ev = SymmetricEigen::new(scaled).eigenvalues;
        let lo = ev.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
        let hi = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if cond > report.worst_condition {
            report.worst_condition = cond;
            report.worst_direction = xi;
        }
    }
    Ok(report)
}

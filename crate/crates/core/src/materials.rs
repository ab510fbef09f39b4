//! Material constants, their validation, the assembled coupling array
//! `c_iJKl`, rigid rotations and the built-in material database.
//!
//! Stiffness is stored as a Voigt matrix holding tensor components directly
//! (`C44 = c_2323`, no engineering-strain factors). Voigt pairs are
//! `11→1, 22→2, 33→3, 23→4, 13→5, 12→6`. Piezoelectric and piezomagnetic
//! tensors `e_kij`, `q_kij` are 3×6 with the Voigt index on `(i, j)`.
//!
//! Everything is SI. Potential problems (`field_dim = 1`) keep their 3×3
//! coefficient matrix in the upper-left block of `elastic`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type Mat3 = [[f64; 3]; 3];
pub type Voigt6 = [[f64; 6]; 6];
pub type Voigt3x6 = [[f64; 6]; 3];
pub type Rotation = [[f64; 3]; 3];

const SYMMETRY_TOL: f64 = 1e-9;

const GPA: f64 = 1e9;
const EPS_UNIT: f64 = 1e-9;
const KAPPA_UNIT: f64 = 1e-6;

/// Voigt index of the symmetric pair `(i, j)` (0-based).
#[inline]
pub fn voigt_index(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (1, 2) => 3,
        (0, 2) => 4,
        (0, 1) => 5,
        _ => unreachable!("tensor index out of range"),
    }
}

const VOIGT_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

pub type Tensor4 = [[[[f64; 3]; 3]; 3]; 3];
pub type Tensor3 = [[[f64; 3]; 3]; 3];

pub fn voigt_to_tensor4(c: &Voigt6) -> Tensor4 {
    let mut t = [[[[0.0; 3]; 3]; 3]; 3];
    for (i, ti) in t.iter_mut().enumerate() {
        for (j, tij) in ti.iter_mut().enumerate() {
            for (k, tijk) in tij.iter_mut().enumerate() {
                for (l, v) in tijk.iter_mut().enumerate() {
                    *v = c[voigt_index(i, j)][voigt_index(k, l)];
                }
            }
        }
    }
    t
}

pub fn tensor4_to_voigt(t: &Tensor4) -> Voigt6 {
    let mut c = [[0.0; 6]; 6];
    for (a, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
        for (b, &(k, l)) in VOIGT_PAIRS.iter().enumerate() {
            c[a][b] = t[i][j][k][l];
        }
    }
    c
}

pub fn voigt_to_tensor3(e: &Voigt3x6) -> Tensor3 {
    let mut t = [[[0.0; 3]; 3]; 3];
    for (k, tk) in t.iter_mut().enumerate() {
        for (i, tki) in tk.iter_mut().enumerate() {
            for (j, v) in tki.iter_mut().enumerate() {
                *v = e[k][voigt_index(i, j)];
            }
        }
    }
    t
}

pub fn tensor3_to_voigt(t: &Tensor3) -> Voigt3x6 {
    let mut e = [[0.0; 6]; 3];
    for (k, ek) in e.iter_mut().enumerate() {
        for (a, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
            ek[a] = t[k][i][j];
        }
    }
    e
}

/// Physical constants of a (possibly multi-field) linear material.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialConstants {
    pub name: String,
    /// Number of coupled fields: 1 (potential), 3 (elastic), 4 (piezoelectric)
    /// or 5 (magneto-electro-elastic).
    pub field_dim: usize,
    /// Stiffness, Voigt with tensor components (Pa).
    pub elastic: Voigt6,
    /// `e_kij`, C/m².
    pub piezoelectric: Option<Voigt3x6>,
    /// `q_kij`, N/(A·m).
    pub piezomagnetic: Option<Voigt3x6>,
    /// `ε_il`, C/(V·m).
    pub dielectric: Option<Mat3>,
    /// `λ_il`, N·s/(A·m).
    pub magnetoelectric: Option<Mat3>,
    /// `κ_il`, N·s²/C².
    pub permeability: Option<Mat3>,
}

fn max_abs<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

fn check_symmetric3(name: &str, m: &Mat3, out: &mut Vec<String>) {
    let scale = max_abs(m.iter().flatten()).max(f64::MIN_POSITIVE);
    for i in 0..3 {
        for j in (i + 1)..3 {
            if (m[i][j] - m[j][i]).abs() > SYMMETRY_TOL * scale {
                out.push(format!(
                    "{name}: component ({},{}) = {:e} differs from ({},{}) = {:e}",
                    i + 1,
                    j + 1,
                    m[i][j],
                    j + 1,
                    i + 1,
                    m[j][i]
                ));
            }
        }
    }
}

fn check_positive_definite(name: &str, m: DMatrix<f64>, out: &mut Vec<String>) {
    let sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues;
    let max = eig.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > SYMMETRY_TOL * max) {
        out.push(format!("{name}: not positive definite (smallest eigenvalue {min:e}, largest {max:e})"));
    }
}

impl MaterialConstants {
    /// Potential problem `∂_k (K_kl ∂_l φ) = 0` with symmetric `K`.
    pub fn potential(name: &str, k: Mat3) -> Self {
        let mut elastic = [[0.0; 6]; 6];
        for i in 0..3 {
            elastic[i][..3].copy_from_slice(&k[i]);
        }
        Self {
            name: name.to_string(),
            field_dim: 1,
            elastic,
            piezoelectric: None,
            piezomagnetic: None,
            dielectric: None,
            magnetoelectric: None,
            permeability: None,
        }
    }

    pub fn laplace() -> Self {
        Self::potential("Laplace", [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn elastic(name: &str, c: Voigt6) -> Self {
        Self {
            name: name.to_string(),
            field_dim: 3,
            elastic: c,
            piezoelectric: None,
            piezomagnetic: None,
            dielectric: None,
            magnetoelectric: None,
            permeability: None,
        }
    }

    /// Isotropic elasticity from Lamé constants.
    pub fn isotropic_lame(lambda: f64, mu: f64) -> Self {
        let mut c = [[0.0; 6]; 6];
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] = lambda;
            }
            c[i][i] = lambda + 2.0 * mu;
            c[i + 3][i + 3] = mu;
        }
        Self::elastic(&format!("IsoLame({lambda},{mu})"), c)
    }

    /// Isotropic elasticity from shear modulus and Poisson ratio.
    pub fn isotropic_elastic(mu: f64, nu: f64) -> Result<Self> {
        if !(mu > 0.0) || !(nu > -1.0 && nu < 0.5) {
            return Err(Error::Domain(format!("isotropic constants out of range: mu = {mu}, nu = {nu}")));
        }
        let lambda = 2.0 * mu * nu / (1.0 - 2.0 * nu);
        let mut m = Self::isotropic_lame(lambda, mu);
        m.name = format!("IsoElastic({mu},{nu})");
        Ok(m)
    }

    /// Cubic crystal with Voigt constants `c11, c12, c44`.
    pub fn cubic(name: &str, c11: f64, c12: f64, c44: f64) -> Self {
        let g = [c11, c11, c11, c12, c12, c12, c44, c44, c44].map(|v| v / GPA);
        Self::elastic(name, orthotropic_voigt(g))
    }

    /// Violations of the required symmetries and definiteness; empty when valid.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.field_dim;
        if ![1, 3, 4, 5].contains(&n) {
            out.push(format!("field dimension {n} is not one of 1, 3, 4, 5"));
            return out;
        }
        let presence = [
            ("piezoelectric", self.piezoelectric.is_some(), n >= 4),
            ("dielectric", self.dielectric.is_some(), n >= 4),
            ("piezomagnetic", self.piezomagnetic.is_some(), n == 5),
            ("magnetoelectric", self.magnetoelectric.is_some(), n == 5),
            ("permeability", self.permeability.is_some(), n == 5),
        ];
        for (block, present, required) in presence {
            if present && !required {
                out.push(format!("{block} block present but field dimension is {n}"));
            } else if required && !present {
                out.push(format!("{block} block missing for field dimension {n}"));
            }
        }

        if n == 1 {
            let k: Mat3 = std::array::from_fn(|i| std::array::from_fn(|j| self.elastic[i][j]));
            check_symmetric3("coefficient matrix", &k, &mut out);
            check_positive_definite("coefficient matrix", DMatrix::from_fn(3, 3, |i, j| k[i][j]), &mut out);
            return out;
        }

        let c = &self.elastic;
        let scale = max_abs(c.iter().flatten()).max(f64::MIN_POSITIVE);
        for a in 0..6 {
            for b in (a + 1)..6 {
                if (c[a][b] - c[b][a]).abs() > SYMMETRY_TOL * scale {
                    let (i, j) = VOIGT_PAIRS[a];
                    let (k, l) = VOIGT_PAIRS[b];
                    out.push(format!(
                        "elastic: C{}{} = {:e} differs from C{}{} = {:e} (c_{}{}{}{} != c_{}{}{}{})",
                        a + 1,
                        b + 1,
                        c[a][b],
                        b + 1,
                        a + 1,
                        c[b][a],
                        i + 1,
                        j + 1,
                        k + 1,
                        l + 1,
                        k + 1,
                        l + 1,
                        i + 1,
                        j + 1
                    ));
                }
            }
        }
        check_positive_definite("elastic", DMatrix::from_fn(6, 6, |i, j| c[i][j]), &mut out);
        for (name, m) in [
            ("dielectric", &self.dielectric),
            ("magnetoelectric", &self.magnetoelectric),
            ("permeability", &self.permeability),
        ] {
            if let Some(m) = m {
                check_symmetric3(name, m, &mut out);
            }
        }
        out
    }

    /// Assemble the coupling array `c_iJKl`.
    pub fn extend(&self) -> Result<ExtendedTensor> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        let n = self.field_dim;
        let mut ext = ExtendedTensor::zeros(n);
        if n == 1 {
            for i in 0..3 {
                for l in 0..3 {
                    ext.set(i, 0, 0, l, self.elastic[i][l]);
                }
            }
            return Ok(ext);
        }
        let c = voigt_to_tensor4(&self.elastic);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        ext.set(i, j, k, l, c[i][j][k][l]);
                    }
                }
            }
        }
        let mut couple = |field: usize, t: &Tensor3| {
            for i in 0..3 {
                for j in 0..3 {
                    for l in 0..3 {
                        // J ≤ 3, K = field: t_lij ; J = field, K ≤ 3: t_ijl
                        ext.set(i, j, field, l, t[l][i][j]);
                        ext.set(i, field, j, l, t[i][j][l]);
                    }
                }
            }
        };
        if let Some(e) = &self.piezoelectric {
            couple(3, &voigt_to_tensor3(e));
        }
        if let Some(q) = &self.piezomagnetic {
            couple(4, &voigt_to_tensor3(q));
        }
        for i in 0..3 {
            for l in 0..3 {
                if let Some(eps) = &self.dielectric {
                    ext.set(i, 3, 3, l, -eps[i][l]);
                }
                if let Some(lam) = &self.magnetoelectric {
                    ext.set(i, 3, 4, l, -lam[i][l]);
                    ext.set(i, 4, 3, l, -lam[i][l]);
                }
                if let Some(kap) = &self.permeability {
                    ext.set(i, 4, 4, l, -kap[i][l]);
                }
            }
        }
        Ok(ext)
    }

    /// Rigidly rotate every property tensor by the proper rotation `r`:
    /// `c'_ijkl = R_ia R_jb R_kc R_ld c_abcd` and likewise for lower ranks.
    pub fn rotate(&self, r: &Rotation) -> Result<Self> {
        check_rotation(r)?;
        let rot2 = |m: &Mat3| -> Mat3 {
            let mut out = [[0.0; 3]; 3];
            for (i, oi) in out.iter_mut().enumerate() {
                for (j, v) in oi.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for a in 0..3 {
                        for b in 0..3 {
                            s += r[i][a] * r[j][b] * m[a][b];
                        }
                    }
                    *v = s;
                }
            }
            out
        };
        let rot3 = |e: &Voigt3x6| -> Voigt3x6 {
            let t = voigt_to_tensor3(e);
            let mut out = [[[0.0; 3]; 3]; 3];
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        let mut s = 0.0;
                        for a in 0..3 {
                            for b in 0..3 {
                                for c in 0..3 {
                                    s += r[k][a] * r[i][b] * r[j][c] * t[a][b][c];
                                }
                            }
                        }
                        out[k][i][j] = s;
                    }
                }
            }
            tensor3_to_voigt(&out)
        };

        let mut rotated = self.clone();
        if self.field_dim == 1 {
            let k: Mat3 = std::array::from_fn(|i| std::array::from_fn(|j| self.elastic[i][j]));
            rotated.elastic = Self::potential(&self.name, rot2(&k)).elastic;
            return Ok(rotated);
        }
        rotated.elastic = rotate_voigt6(&self.elastic, r);
        rotated.piezoelectric = self.piezoelectric.as_ref().map(rot3);
        rotated.piezomagnetic = self.piezomagnetic.as_ref().map(rot3);
        rotated.dielectric = self.dielectric.as_ref().map(rot2);
        rotated.magnetoelectric = self.magnetoelectric.as_ref().map(rot2);
        rotated.permeability = self.permeability.as_ref().map(rot2);
        Ok(rotated)
    }

    /// Human-readable property table in `property / component / value` layout.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "material: {} (field dimension {})", self.name, self.field_dim);
        let _ = writeln!(s, "{:<48} {:<28} {}", "property", "component", "value");
        let mut rows: Vec<(String, Vec<(String, f64)>)> = Vec::new();
        if self.field_dim == 1 {
            let mut comps = Vec::new();
            for i in 0..3 {
                for j in i..3 {
                    comps.push((format!("k_{}{}", i + 1, j + 1), self.elastic[i][j]));
                }
            }
            rows.push(("coefficient matrix [-]".into(), comps));
        } else {
            let mut comps = Vec::new();
            for a in 0..6 {
                for b in a..6 {
                    let (i, j) = VOIGT_PAIRS[a];
                    let (k, l) = VOIGT_PAIRS[b];
                    comps.push((format!("c_{}{}{}{}", i + 1, j + 1, k + 1, l + 1), self.elastic[a][b] / GPA));
                }
            }
            rows.push(("elastic constants [1e9 N/m^2]".into(), comps));
            let rank3 = |sym: &str, e: &Voigt3x6| {
                let mut comps = Vec::new();
                for (k, ek) in e.iter().enumerate() {
                    for (a, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
                        comps.push((format!("{sym}_{}{}{}", k + 1, i + 1, j + 1), ek[a]));
                    }
                }
                comps
            };
            let rank2 = |sym: &str, m: &Mat3, unit: f64| {
                let mut comps = Vec::new();
                for i in 0..3 {
                    for j in i..3 {
                        comps.push((format!("{sym}_{}{}", i + 1, j + 1), m[i][j] / unit));
                    }
                }
                comps
            };
            if let Some(e) = &self.piezoelectric {
                rows.push(("piezoelectric constants [C/m^2]".into(), rank3("e", e)));
            }
            if let Some(q) = &self.piezomagnetic {
                rows.push(("piezomagnetic constants [N/(A m)]".into(), rank3("q", q)));
            }
            if let Some(m) = &self.magnetoelectric {
                rows.push(("magneto-electric coefficients [N s/(A m)]".into(), rank2("lambda", m, 1.0)));
            }
            if let Some(m) = &self.dielectric {
                rows.push(("dielectric permeability constants [1e-9 C/(V m)]".into(), rank2("eps", m, EPS_UNIT)));
            }
            if let Some(m) = &self.permeability {
                rows.push(("magnetic permeability coefficients [1e-6 N s^2/C^2]".into(), rank2("kappa", m, KAPPA_UNIT)));
            }
        }
        for (property, comps) in rows {
            // group equal nonzero values, keeping first-appearance order
            let mut groups: Vec<(f64, Vec<String>)> = Vec::new();
            for (name, v) in comps {
                if v == 0.0 {
                    continue;
                }
                match groups.iter_mut().find(|(g, _)| (*g - v).abs() <= 1e-12 * v.abs()) {
                    Some((_, names)) => names.push(name),
                    None => groups.push((v, vec![name])),
                }
            }
            let mut label = property.as_str();
            for (v, names) in &groups {
                let _ = writeln!(s, "{:<48} {:<28} {}", label, names.join(", "), format_value(*v));
                label = "";
            }
        }
        s
    }

    /// Read a material from the JSON schema used on disk.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: MaterialFile = serde_json::from_str(text)?;
        file.into_material()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&MaterialFile::from_material(self))?)
    }
}

fn format_value(v: f64) -> String {
    let s = format!("{v}");
    if s.len() > 12 {
        format!("{v:.6e}")
    } else {
        s
    }
}

fn rotate_voigt6(c: &Voigt6, r: &Rotation) -> Voigt6 {
    let t = voigt_to_tensor4(c);
    // one index at a time keeps this O(3^5)
    let mut a = t;
    for pos in 0..4 {
        let src = a;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let mut s = 0.0;
                        for p in 0..3 {
                            let v = match pos {
                                0 => src[p][j][k][l],
                                1 => src[i][p][k][l],
                                2 => src[i][j][p][l],
                                _ => src[i][j][k][p],
                            };
                            let idx = [i, j, k, l][pos];
                            s += r[idx][p] * v;
                        }
                        a[i][j][k][l] = s;
                    }
                }
            }
        }
    }
    tensor4_to_voigt(&a)
}

pub(crate) fn check_rotation(r: &Rotation) -> Result<()> {
    let m = Matrix3::from_fn(|i, j| r[i][j]);
    let err = (m.transpose() * m - Matrix3::identity()).abs().max();
    if err > 1e-12 {
        return Err(Error::Domain(format!("matrix is not orthogonal (|R^T R - I| = {err:e})")));
    }
    let det = m.determinant();
    if (det - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("rotation must be proper (det = {det})")));
    }
    Ok(())
}

/// Rotation by `angle` radians about coordinate axis `axis` (0, 1, 2).
pub fn axis_rotation(axis: usize, angle: f64) -> Rotation {
    let (s, c) = angle.sin_cos();
    match axis {
        0 => [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
        1 => [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
        _ => [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
    }
}

pub fn compose(a: &Rotation, b: &Rotation) -> Rotation {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

/// Material frame inclined by 60° to the x₁–x₂ plane (about x₁) and then
/// turned by 30° within that plane (about x₃).
pub fn inclined_frame() -> Rotation {
    compose(
        &axis_rotation(2, 30f64.to_radians()),
        &axis_rotation(0, 60f64.to_radians()),
    )
}

/// Voigt stiffness from `[c11, c22, c33, c12, c13, c23, c44, c55, c66]` in GPa.
fn orthotropic_voigt(c: [f64; 9]) -> Voigt6 {
    let [c11, c22, c33, c12, c13, c23, c44, c55, c66] = c;
    let mut v = [[0.0; 6]; 6];
    v[0][0] = c11;
    v[1][1] = c22;
    v[2][2] = c33;
    v[0][1] = c12;
    v[1][0] = c12;
    v[0][2] = c13;
    v[2][0] = c13;
    v[1][2] = c23;
    v[2][1] = c23;
    v[3][3] = c44;
    v[4][4] = c55;
    v[5][5] = c66;
    for row in v.iter_mut() {
        for x in row.iter_mut() {
            *x *= GPA;
        }
    }
    v
}

/// Voigt piezo tensor from `e_113 (=e_15), e_223 (=e_24), e_333, e_311, e_322`.
fn piezo_voigt(e113: f64, e223: f64, e333: f64, e311: f64, e322: f64) -> Voigt3x6 {
    let mut e = [[0.0; 6]; 3];
    e[0][4] = e113;
    e[1][3] = e223;
    e[2][2] = e333;
    e[2][0] = e311;
    e[2][1] = e322;
    e
}

fn diag(a: f64, b: f64, c: f64, unit: f64) -> Mat3 {
    [[a * unit, 0.0, 0.0], [0.0, b * unit, 0.0], [0.0, 0.0, c * unit]]
}

pub const BUILTIN_NAMES: [&str; 9] = ["Laplace", "IsoElastic(mu,nu)", "Cu", "Au", "Ni", "PZT-4", "PVDF", "M1", "M2"];

fn pvdf_elastic() -> Voigt6 {
    orthotropic_voigt([3.61, 3.13, 1.63, 1.61, 1.42, 1.31, 0.55, 0.59, 0.69])
}

fn pvdf_piezo() -> Voigt3x6 {
    piezo_voigt(-0.016, -0.013, -0.021, 0.032, -0.004)
}

/// Look up a built-in material. `IsoElastic(μ,ν)` takes μ in Pa.
pub fn builtin(name: &str) -> Result<MaterialConstants> {
    let key = name.trim().to_ascii_lowercase();
    if let Some(args) = key.strip_prefix("isoelastic(").and_then(|s| s.strip_suffix(')')) {
        let parts: Vec<f64> = args
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Domain(format!("cannot parse isotropic constants in '{name}'")))?;
        if parts.len() != 2 {
            return Err(Error::Domain(format!("IsoElastic expects (mu,nu), got '{name}'")));
        }
        return MaterialConstants::isotropic_elastic(parts[0], parts[1]);
    }
    let mat = match key.as_str() {
        "laplace" => MaterialConstants::laplace(),
        "cu" => MaterialConstants::cubic("Cu", 168.0 * GPA, 121.0 * GPA, 75.0 * GPA),
        "au" => MaterialConstants::cubic("Au", 185.0 * GPA, 158.0 * GPA, 39.7 * GPA),
        "ni" => MaterialConstants::cubic("Ni", 251.0 * GPA, 150.0 * GPA, 124.0 * GPA),
        "pzt-4" | "pzt4" => MaterialConstants {
            name: "PZT-4".into(),
            field_dim: 4,
            elastic: orthotropic_voigt([139.0, 139.0, 115.0, 77.8, 74.3, 74.3, 25.6, 25.6, (139.0 - 77.8) / 2.0]),
            piezoelectric: Some(piezo_voigt(12.7, 12.7, 15.1, -5.2, -5.2)),
            piezomagnetic: None,
            dielectric: Some(diag(6.461, 6.461, 5.620, EPS_UNIT)),
            magnetoelectric: None,
            permeability: None,
        },
        "pvdf" => MaterialConstants {
            name: "PVDF".into(),
            field_dim: 4,
            elastic: pvdf_elastic(),
            piezoelectric: Some(pvdf_piezo()),
            piezomagnetic: None,
            dielectric: Some(diag(0.054, 0.066, 0.059, EPS_UNIT)),
            magnetoelectric: None,
            permeability: None,
        },
        "m1" => MaterialConstants {
            name: "M1".into(),
            field_dim: 5,
            elastic: orthotropic_voigt([166.0, 166.0, 162.0, 77.0, 78.0, 78.0, 43.0, 43.0, (166.0 - 77.0) / 2.0]),
            piezoelectric: Some(piezo_voigt(11.6, 11.6, 18.6, -4.4, -4.4)),
            piezomagnetic: Some(piezo_voigt(550.0, 550.0, 699.7, 580.3, 580.3)),
            dielectric: Some(diag(11.2, 11.2, 12.6, EPS_UNIT)),
            magnetoelectric: Some(diag(0.0, 0.0, 0.0, 1.0)),
            permeability: Some(diag(5.0, 5.0, 10.0, KAPPA_UNIT)),
        },
        "m2" => MaterialConstants {
            name: "M2".into(),
            field_dim: 5,
            elastic: pvdf_elastic(),
            piezoelectric: Some(pvdf_piezo()),
            piezomagnetic: Some(piezo_voigt(550.0, 570.0, 699.7, 580.3, 590.0)),
            dielectric: Some(diag(0.054, 0.066, 0.059, EPS_UNIT)),
            magnetoelectric: Some(diag(0.6, 0.8, 1.0, 1.0)),
            permeability: Some(diag(5.0, 7.0, 10.0, KAPPA_UNIT)),
        },
        _ => {
            return Err(Error::UnknownMaterial {
                name: name.to_string(),
                available: BUILTIN_NAMES.join(", "),
            })
        }
    };
    Ok(mat)
}

/// Cubic crystal with Cu's `c11`, `c12` and `c44 = A (c11 − c12) / 2`.
pub fn zener_family(a: f64) -> Result<MaterialConstants> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("Zener ratio must be positive, got {a}")));
    }
    let (c11, c12) = (168.0 * GPA, 121.0 * GPA);
    Ok(MaterialConstants::cubic(&format!("Zener({a})"), c11, c12, a * (c11 - c12) / 2.0))
}

/// The assembled multi-field coupling array `c_iJKl` (row-major over
/// `i, J, K, l`).
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedTensor {
    field_dim: usize,
    data: Vec<f64>,
}

impl ExtendedTensor {
    pub fn zeros(field_dim: usize) -> Self {
        Self {
            field_dim,
            data: vec![0.0; 9 * field_dim * field_dim],
        }
    }

    pub fn field_dim(&self) -> usize {
        self.field_dim
    }

    #[inline]
    fn offset(&self, i: usize, jj: usize, kk: usize, l: usize) -> usize {
        let n = self.field_dim;
        ((i * n + jj) * n + kk) * 3 + l
    }

    #[inline]
    pub fn get(&self, i: usize, jj: usize, kk: usize, l: usize) -> f64 {
        self.data[self.offset(i, jj, kk, l)]
    }

    pub fn set(&mut self, i: usize, jj: usize, kk: usize, l: usize, v: f64) {
        let o = self.offset(i, jj, kk, l);
        self.data[o] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Largest deviation from `c_iJKl = c_lKJi`, relative to the largest entry.
    pub fn major_symmetry_defect(&self) -> f64 {
        let n = self.field_dim;
        let scale = max_abs(&self.data).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..3 {
            for jj in 0..n {
                for kk in 0..n {
                    for l in 0..3 {
                        worst = worst.max((self.get(i, jj, kk, l) - self.get(l, kk, jj, i)).abs());
                    }
                }
            }
        }
        worst / scale
    }

    /// SHA-256 digest of the field dimension and the entries rounded to 12
    /// significant digits, so unit conversions on the way through a material
    /// file do not change the identity.
    pub fn material_hash(&self) -> MaterialHash {
        let mut h = Sha256::new();
        h.update((self.field_dim as u32).to_le_bytes());
        for &v in &self.data {
            let v = if v == 0.0 { 0.0 } else { v };
            h.update(format!("{v:.11e};").as_bytes());
        }
        let mut out = [0u8; 32];
        out.copy_from_slice(&h.finalize());
        MaterialHash(out)
    }
}

/// Digest identifying the material a coefficient table was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MaterialHash(pub [u8; 32]);

impl MaterialHash {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let bytes = hex::decode(s).ok()?;
        let arr: [u8; 32] = bytes.try_into().ok()?;
        Some(Self(arr))
    }
}

impl std::fmt::Display for MaterialHash {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// On-disk JSON schema. Unit scales are fixed: stiffness in GPa, `eps` in
/// 1e−9 C/(V·m), `kappa` in 1e−6 N·s²/C², the rest SI.
#[derive(Debug, Serialize, Deserialize)]
struct MaterialFile {
    name: String,
    field_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    elastic_voigt: Option<Voigt6>,
    /// Coefficient matrix of a potential problem (`field_dim = 1`), unscaled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    conductivity: Option<Mat3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    e: Option<Voigt3x6>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<Voigt3x6>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps: Option<Mat3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<Mat3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa: Option<Mat3>,
}

fn scaled<const R: usize, const C: usize>(m: [[f64; C]; R], s: f64) -> [[f64; C]; R] {
    m.map(|row| row.map(|v| v * s))
}

impl MaterialFile {
    fn into_material(self) -> Result<MaterialConstants> {
        if self.field_dim == 1 {
            let k = self
                .conductivity
                .ok_or_else(|| Error::Domain("field_dim 1 requires a 'conductivity' matrix".into()))?;
            return Ok(MaterialConstants::potential(&self.name, k));
        }
        let elastic = self
            .elastic_voigt
            .ok_or_else(|| Error::Domain("missing 'elastic_voigt'".into()))?;
        Ok(MaterialConstants {
            name: self.name,
            field_dim: self.field_dim,
            elastic: scaled(elastic, GPA),
            piezoelectric: self.e,
            piezomagnetic: self.q,
            dielectric: self.eps.map(|m| scaled(m, EPS_UNIT)),
            magnetoelectric: self.lambda,
            permeability: self.kappa.map(|m| scaled(m, KAPPA_UNIT)),
        })
    }

    fn from_material(m: &MaterialConstants) -> Self {
        if m.field_dim == 1 {
            return Self {
                name: m.name.clone(),
                field_dim: 1,
                elastic_voigt: None,
                conductivity: Some(std::array::from_fn(|i| std::array::from_fn(|j| m.elastic[i][j]))),
                e: None,
                q: None,
                eps: None,
                lambda: None,
                kappa: None,
            };
        }
        Self {
            name: m.name.clone(),
            field_dim: m.field_dim,
            elastic_voigt: Some(scaled(m.elastic, 1.0 / GPA)),
            conductivity: None,
            e: m.piezoelectric,
            q: m.piezomagnetic,
            eps: m.dielectric.map(|x| scaled(x, 1.0 / EPS_UNIT)),
            lambda: m.magnetoelectric,
            kappa: m.permeability.map(|x| scaled(x, 1.0 / KAPPA_UNIT)),
        }
    }
}

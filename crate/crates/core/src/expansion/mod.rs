//! Spherical-harmonics coefficient tables of the inverse symbol and its
//! `ξ̂`-weighted moments, which drive the series for the fundamental solution
//! and its derivatives.
//!
//! A table for multi-index `(i₁,i₂,i₃)` holds
//! `E^{ℓm} = ∫_{S₁} ξ̂₁^{i₁} ξ̂₂^{i₂} ξ̂₃^{i₃} [L*(ξ̂)]⁻¹ conj(Y_ℓ^m(ξ̂)) dS`
//! for `0 ≤ ℓ ≤ degree`, all `m`, as `N×N` complex blocks.

mod build;
mod persist;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::materials::MaterialHash;
use crate::special::legendre_p_at_zero;

pub use build::{
    base_coefficients, build_tables, build_tables_timed, default_quad_degree, derive_coefficients, derive_multi, moment_coefficients,
};
pub use persist::{
    load_table, load_table_for, save_table, table_file_name, table_from_bytes, table_to_bytes, table_to_json,
    FORMAT_VERSION,
};

/// Default highest total derivative order.
pub const DEFAULT_MAX_ORDER: u32 = 4;

/// Derivative counts per coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub [u32; 3]);

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex([0, 0, 0]);

    pub fn new(i1: u32, i2: u32, i3: u32) -> Self {
        Self([i1, i2, i3])
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Multi-index raised by one on `axis` (1, 2 or 3).
    pub fn raised(&self, axis: usize) -> Self {
        let mut v = self.0;
        v[axis - 1] += 1;
        Self(v)
    }

    /// Every multi-index of total order exactly `order`, `i₁` descending.
    pub fn all_of_order(order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for i1 in (0..=order).rev() {
            for i2 in (0..=(order - i1)).rev() {
                out.push(MultiIndex([i1, i2, order - i1 - i2]));
            }
        }
        out
    }

    pub fn all_up_to(order: u32) -> Vec<MultiIndex> {
        (0..=order).flat_map(Self::all_of_order).collect()
    }

    /// Axis sequence applied to the base table: axis 1 first.
    pub fn axis_sequence(&self) -> Vec<usize> {
        let mut seq = Vec::new();
        for (a, &n) in self.0.iter().enumerate() {
            seq.extend(std::iter::repeat(a + 1).take(n as usize));
        }
        seq
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0[0], self.0[1], self.0[2])
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Domain(format!("multi-index must be 'i1,i2,i3', got '{s}'")));
        }
        let mut v = [0u32; 3];
        for (slot, p) in v.iter_mut().zip(parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::Domain(format!("invalid multi-index component '{p}'")))?;
        }
        Ok(Self(v))
    }
}

/// Number of stored `(ℓ, m)` pairs for all `ℓ ≤ degree`.
#[inline]
pub(crate) fn lm_count(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

#[inline]
pub(crate) fn lm_index(l: usize, m: i32) -> usize {
    ((l * l + l) as i64 + m as i64) as usize
}

/// Coefficient table of one material and multi-index.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTable {
    material_hash: MaterialHash,
    field_dim: usize,
    degree: usize,
    multi_index: MultiIndex,
    full_parity: bool,
    entries: Vec<Complex64>,
    prefactors: Vec<f64>,
    conjugation_residual: f64,
}

impl CoeffTable {
    /// Assemble a table from entries for every `(ℓ, m)`, `|m| ≤ ℓ ≤ degree`,
    /// laid out `(ℓ² + ℓ + m) N² + row N + col`.
    ///
    /// Negative orders are then overwritten from `m > 0` through
    /// `E(ℓ,−m) = (−1)^m conj E(ℓ,m)`; the largest mismatch found first is
    /// kept as [`CoeffTable::conjugation_residual`].
    pub fn from_entries(
        material_hash: MaterialHash,
        field_dim: usize,
        degree: usize,
        multi_index: MultiIndex,
        mut entries: Vec<Complex64>,
    ) -> Result<Self> {
        let nn = field_dim * field_dim;
        if entries.len() != lm_count(degree) * nn {
            return Err(Error::Shape(format!(
                "expected {} entries for degree {degree} and N = {field_dim}, got {}",
                lm_count(degree) * nn,
                entries.len()
            )));
        }
        let scale = entries.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let mut worst = 0.0f64;
        for l in 0..=degree {
            for m in 1..=(l as i32) {
                let pos = lm_index(l, m) * nn;
                let neg = lm_index(l, -m) * nn;
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                for k in 0..nn {
                    let mirrored = entries[pos + k].conj() * sign;
                    worst = worst.max((entries[neg + k] - mirrored).norm());
                    entries[neg + k] = mirrored;
                }
            }
        }
        let rel = if scale > 0.0 { worst / scale } else { 0.0 };
        Ok(Self::assemble(material_hash, field_dim, degree, multi_index, true, entries, rel))
    }

    fn assemble(
        material_hash: MaterialHash,
        field_dim: usize,
        degree: usize,
        multi_index: MultiIndex,
        full_parity: bool,
        entries: Vec<Complex64>,
        conjugation_residual: f64,
    ) -> Self {
        let order = multi_index.order() as i32;
        let prefactors = (0..=degree).map(|l| legendre_p_at_zero(l as u32, order)).collect();
        Self {
            material_hash,
            field_dim,
            degree,
            multi_index,
            full_parity,
            entries,
            prefactors,
            conjugation_residual,
        }
    }

    pub fn material_hash(&self) -> MaterialHash {
        self.material_hash
    }

    pub fn field_dim(&self) -> usize {
        self.field_dim
    }

    /// Highest stored degree `ℓ`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn multi_index(&self) -> MultiIndex {
        self.multi_index
    }

    pub fn order(&self) -> u32 {
        self.multi_index.order()
    }

    /// Whether degrees of both parities are present, as the recurrences need.
    pub fn full_parity(&self) -> bool {
        self.full_parity
    }

    /// `P_ℓ^I(0)` for `ℓ = 0..=degree`.
    pub fn prefactors(&self) -> &[f64] {
        &self.prefactors
    }

    /// Relative mismatch of the negative-order relation before canonicalization.
    pub fn conjugation_residual(&self) -> f64 {
        self.conjugation_residual
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// The `N×N` block for `(ℓ, m)`, row-major.
    pub fn block(&self, l: usize, m: i32) -> &[Complex64] {
        assert!(l <= self.degree && m.unsigned_abs() as usize <= l, "({l},{m}) out of range");
        let nn = self.field_dim * self.field_dim;
        let o = lm_index(l, m) * nn;
        &self.entries[o..o + nn]
    }

    pub fn get(&self, l: usize, m: i32, row: usize, col: usize) -> Complex64 {
        self.block(l, m)[row * self.field_dim + col]
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |a, z| a.max(z.norm()))
    }

    /// Largest relative deviation from `E(ℓ,−m) = (−1)^m conj E(ℓ,m)` as stored.
    pub fn conjugation_defect(&self) -> f64 {
        let nn = self.field_dim * self.field_dim;
        let mut worst = 0.0f64;
        for l in 0..=self.degree {
            for m in 1..=(l as i32) {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                let (p, n) = (self.block(l, m), self.block(l, -m));
                for k in 0..nn {
                    worst = worst.max((n[k] - p[k].conj() * sign).norm());
                }
            }
        }
        let s = self.max_abs();
        if s > 0.0 {
            worst / s
        } else {
            0.0
        }
    }

    /// Largest relative deviation from `E = Eᵀ` blockwise.
    pub fn transpose_defect(&self) -> f64 {
        let n = self.field_dim;
        let mut worst = 0.0f64;
        for l in 0..=self.degree {
            for m in -(l as i32)..=(l as i32) {
                let b = self.block(l, m);
                for r in 0..n {
                    for c in 0..n {
                        worst = worst.max((b[r * n + c] - b[c * n + r]).norm());
                    }
                }
            }
        }
        let s = self.max_abs();
        if s > 0.0 {
            worst / s
        } else {
            0.0
        }
    }

    /// Copy keeping only degrees `ℓ ≤ degree`.
    pub fn truncated(&self, degree: usize) -> CoeffTable {
        let degree = degree.min(self.degree);
        let nn = self.field_dim * self.field_dim;
        let entries = self.entries[..lm_count(degree) * nn].to_vec();
        Self::assemble(
            self.material_hash,
            self.field_dim,
            degree,
            self.multi_index,
            self.full_parity,
            entries,
            self.conjugation_residual,
        )
    }

    /// Drop the degrees that never enter evaluation (parity opposite to `I`).
    /// The result can be evaluated but no longer differentiated.
    pub fn pruned_to_evaluation_parity(&self) -> CoeffTable {
        let mut t = self.clone();
        let parity = (self.order() % 2) as usize;
        let nn = self.field_dim * self.field_dim;
        for l in (0..=self.degree).filter(|l| l % 2 != parity) {
            let start = lm_index(l, -(l as i32)) * nn;
            let end = (lm_index(l, l as i32) + 1) * nn;
            t.entries[start..end].fill(Complex64::new(0.0, 0.0));
        }
        t.full_parity = false;
        t
    }

    pub(crate) fn raw_parts(
        material_hash: MaterialHash,
        field_dim: usize,
        degree: usize,
        multi_index: MultiIndex,
        full_parity: bool,
        entries: Vec<Complex64>,
    ) -> Self {
        Self::assemble(material_hash, field_dim, degree, multi_index, full_parity, entries, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(MultiIndex::all_up_to(2).len(), 10);
        assert_eq!(MultiIndex::all_of_order(3).len(), 10);
        assert_eq!(MultiIndex::new(2, 0, 1).axis_sequence(), vec![1, 1, 3]);
        assert_eq!("1, 2,0".parse::<MultiIndex>().unwrap(), MultiIndex::new(1, 2, 0));
        assert!("1,2".parse::<MultiIndex>().is_err());
        assert_eq!(MultiIndex::new(1, 1, 0).to_string(), "1,1,0");
    }

    #[test]
    fn layout_indices() {
        assert_eq!(lm_index(0, 0), 0);
        assert_eq!(lm_index(1, -1), 1);
        assert_eq!(lm_index(1, 1), 3);
        assert_eq!(lm_index(2, -2), 4);
        assert_eq!(lm_count(2), 9);
    }
}

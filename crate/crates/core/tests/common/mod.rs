//! Shared oracles for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use anisogreen::expansion::MultiIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sum of `c · x^a y^b z^c · r^(−k)` terms, closed under differentiation.
#[derive(Debug, Clone, Default)]
pub struct RadialPoly(BTreeMap<([u32; 3], u32), f64>);

impl RadialPoly {
    pub fn monomial(coef: f64, pow: [u32; 3], k: u32) -> Self {
        let mut p = Self::default();
        p.add(pow, k, coef);
        p
    }

    fn add(&mut self, pow: [u32; 3], k: u32, c: f64) {
        *self.0.entry((pow, k)).or_insert(0.0) += c;
    }

    pub fn plus(mut self, other: &Self) -> Self {
        for (&(pow, k), &c) in &other.0 {
            self.add(pow, k, c);
        }
        self
    }

    /// `∂/∂x_axis`, axis 0..2.
    pub fn diff(&self, axis: usize) -> Self {
        let mut out = Self::default();
        for (&(pow, k), &c) in &self.0 {
            if pow[axis] > 0 {
                let mut p = pow;
                p[axis] -= 1;
                out.add(p, k, c * pow[axis] as f64);
            }
            // ∂ r^(−k) = −k x r^(−k−2)
            let mut p = pow;
            p[axis] += 1;
            out.add(p, k + 2, -(k as f64) * c);
        }
        out
    }

    pub fn diff_multi(&self, mi: MultiIndex) -> Self {
        let mut p = self.clone();
        for (axis, &n) in mi.0.iter().enumerate() {
            for _ in 0..n {
                p = p.diff(axis);
            }
        }
        p
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        self.0
            .iter()
            .map(|(&(pow, k), &c)| {
                c * x[0].powi(pow[0] as i32) * x[1].powi(pow[1] as i32) * x[2].powi(pow[2] as i32) / r.powi(k as i32)
            })
            .sum()
    }
}

/// `1 / (4π r)`.
pub fn laplace_kernel() -> RadialPoly {
    RadialPoly::monomial(1.0 / (4.0 * PI), [0, 0, 0], 1)
}

/// Kelvin `Φ_ij`.
pub fn kelvin(mu: f64, nu: f64, i: usize, j: usize) -> RadialPoly {
    let c = 1.0 / (16.0 * PI * mu * (1.0 - nu));
    let mut pow = [0u32; 3];
    pow[i] += 1;
    pow[j] += 1;
    let mut p = RadialPoly::monomial(c, pow, 3);
    if i == j {
        p = p.plus(&RadialPoly::monomial(c * (3.0 - 4.0 * nu), [0, 0, 0], 1));
    }
    p
}

/// Seeded points with radii in `[0.5, 2]` and uniform directions.
pub fn random_points(count: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    anisogreen::bench::random_unit_points(count, seed ^ 0x5eed)
        .into_iter()
        .map(|d| {
            let s: f64 = rng.gen_range(0.5..2.0);
            d.map(|x| x * s)
        })
        .collect()
}

pub fn norm(r: [f64; 3]) -> f64 {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
}

pub fn anisotropic_names() -> [&'static str; 7] {
    ["Cu", "Au", "Ni", "PZT-4", "PVDF", "M1", "M2"]
}

//! Product quadrature on the unit sphere: Gauss–Legendre in `cos θ` times the
//! trapezoid rule in `φ`.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n
        let k = i as f64 + 1.0;
        let theta = PI * (4.0 * k - 1.0) / (4.0 * nf + 2.0);
        let mut z = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 * z.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wt = 2.0 / ((1.0 - z * z) * dp * dp);
        x[n - 1 - i] = z;
        x[i] = -z;
        w[i] = wt;
        w[n - 1 - i] = wt;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_and_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Rings of constant `cos θ`, each with `n_phi` equally spaced longitudes.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    exactness: usize,
    /// `cos θ` per ring, ascending.
    pub ring_cos: Vec<f64>,
    /// Gauss–Legendre weight per ring.
    pub ring_weights: Vec<f64>,
    pub n_phi: usize,
}

impl SphereQuadrature {
    /// Rule integrating `Y_{ℓ₁}^{m₁} conj(Y_{ℓ₂}^{m₂})` exactly for `ℓ₁ + ℓ₂ ≤ degree`.
    pub fn new(degree: usize) -> Self {
        let n_theta = (degree + 1).div_ceil(2) + 1;
        let (ring_cos, ring_weights) = gauss_legendre(n_theta);
        Self {
            exactness: degree,
            ring_cos,
            ring_weights,
            n_phi: degree + 2,
        }
    }

    pub fn exactness_degree(&self) -> usize {
        self.exactness
    }

    pub fn n_theta(&self) -> usize {
        self.ring_cos.len()
    }

    pub fn len(&self) -> usize {
        self.n_theta() * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_phi as f64
    }

    pub fn dphi(&self) -> f64 {
        2.0 * PI / self.n_phi as f64
    }

    /// Node on ring `k` at longitude index `j`.
    pub fn node(&self, k: usize, j: usize) -> [f64; 3] {
        let t = self.ring_cos[k];
        let s = ((1.0 - t) * (1.0 + t)).max(0.0).sqrt();
        let (sp, cp) = self.phi(j).sin_cos();
        [s * cp, s * sp, t]
    }

    /// All `(node, weight)` pairs, ring-major.
    pub fn points(&self) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        (0..self.n_theta()).flat_map(move |k| {
            (0..self.n_phi).map(move |j| (self.node(k, j), self.ring_weights[k] * self.dphi()))
        })
    }

    pub fn integrate(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        self.points().map(|(x, w)| w * f(x)).sum()
    }
}

pub fn make_quadrature(exactness_degree: usize) -> SphereQuadrature {
    SphereQuadrature::new(exactness_degree)
}

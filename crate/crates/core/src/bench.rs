//! Timing harness: per-point cost of series evaluation against the contour
//! integral, each paired with its maximum error against a 512-node contour
//! reference.

use std::hint::black_box;
use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evaluator::evaluate;
use crate::expansion::{build_tables, CoeffTable};
use crate::materials::ExtendedTensor;
use crate::reference::unit_circle;

pub const REFERENCE_NODES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Series,
    Contour,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Series => "series",
            Method::Contour => "contour",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    /// Truncation `L` for the series, node count for the contour.
    pub parameter: usize,
    pub ns_per_point: f64,
    /// Max over points and components of `|value − ref|`, divided by `max |ref|`.
    pub max_error: f64,
    /// Table build time (series rows only), excluded from `ns_per_point`.
    pub build_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub truncations: Vec<usize>,
    pub node_counts: Vec<usize>,
    pub points: usize,
    pub seed: u64,
    pub warmup: usize,
    /// Minimum wall time per timed configuration.
    pub min_time: Duration,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            truncations: vec![10, 20, 30, 40],
            node_counts: vec![16, 32, 64, 128],
            points: 200,
            seed: 42,
            warmup: 1,
            min_time: Duration::from_millis(50),
        }
    }
}

/// Seeded directions uniform on the unit sphere.
pub fn random_unit_points(count: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-3 && n <= 1.0 {
            out.push(v.map(|x| x / n));
        }
    }
    out
}

/// Seeded points with directions uniform on the sphere and radii uniform in
/// `[0.5, 2]`.
pub fn random_points(count: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_unit_points(count, seed ^ 0x5eed)
        .into_iter()
        .map(|d| {
            let r: f64 = rng.gen_range(0.5..2.0);
            d.map(|x| x * r)
        })
        .collect()
}

fn max_error(values: &[DMatrix<f64>], reference: &[DMatrix<f64>]) -> f64 {
    let scale = reference.iter().fold(0.0f64, |a, m| a.max(m.abs().max()));
    let diff = values
        .iter()
        .zip(reference)
        .fold(0.0f64, |a, (v, r)| a.max((v - r).abs().max()));
    diff / scale
}

/// Mean nanoseconds per call of `f` over all points, single-threaded.
fn time_per_point(points: &[[f64; 3]], warmup: usize, min_time: Duration, f: impl Fn([f64; 3]) -> Result<DMatrix<f64>>) -> Result<f64> {
    for _ in 0..warmup {
        for &p in points {
            black_box(f(black_box(p))?);
        }
    }
    let start = Instant::now();
    let mut calls = 0usize;
    loop {
        for &p in points {
            black_box(f(black_box(p))?);
        }
        calls += points.len();
        if start.elapsed() >= min_time {
            break;
        }
    }
    Ok(start.elapsed().as_nanos() as f64 / calls as f64)
}

/// Run both methods over the configured truncations and node counts.
pub fn run_bench(ext: &ExtendedTensor, cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.warmup < 1 {
        return Err(Error::Domain("at least one warmup iteration is required".into()));
    }
    let points = random_unit_points(cfg.points, cfg.seed);
    let reference: Vec<DMatrix<f64>> = points
        .iter()
        .map(|&p| unit_circle(ext, p, 0, None, REFERENCE_NODES))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &l in &cfg.truncations {
        let t0 = Instant::now();
        let table: CoeffTable = build_tables(ext, l, 0, None)?.remove(0);
        let build_seconds = t0.elapsed().as_secs_f64();
        let values: Vec<DMatrix<f64>> = points.iter().map(|&p| evaluate(&table, p).map(|v| v.matrix)).collect::<Result<_>>()?;
        let ns = time_per_point(&points, cfg.warmup, cfg.min_time, |p| evaluate(&table, p).map(|v| v.matrix))?;
        rows.push(BenchRow {
            method: Method::Series,
            parameter: l,
            ns_per_point: ns,
            max_error: max_error(&values, &reference),
            build_seconds,
        });
    }
    for &nodes in &cfg.node_counts {
        let values: Vec<DMatrix<f64>> = points
            .iter()
            .map(|&p| unit_circle(ext, p, 0, None, nodes))
            .collect::<Result<_>>()?;
        let ns = time_per_point(&points, cfg.warmup, cfg.min_time, |p| unit_circle(ext, p, 0, None, nodes))?;
        rows.push(BenchRow {
            method: Method::Contour,
            parameter: nodes,
            ns_per_point: ns,
            max_error: max_error(&values, &reference),
            build_seconds: 0.0,
        });
    }
    Ok(rows)
}

/// Cheapest row of `method` reaching `max_error ≤ target`.
pub fn cheapest_reaching(rows: &[BenchRow], method: Method, target: f64) -> Option<&BenchRow> {
    rows.iter()
        .filter(|r| r.method == method && r.max_error <= target)
        .min_by(|a, b| a.ns_per_point.total_cmp(&b.ns_per_point))
}

pub fn write_bench_csv(rows: &[BenchRow], out: &mut impl Write) -> Result<()> {
    writeln!(out, "method,parameter,ns_per_point,max_error,build_seconds")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.16e},{:.16e},{:.16e}",
            r.method.label(),
            r.parameter,
            r.ns_per_point,
            r.max_error,
            r.build_seconds
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::builtin;

    #[test]
    fn smoke() {
        let ext = builtin("Cu").unwrap().extend().unwrap();
        let cfg = BenchConfig {
            truncations: vec![8],
            node_counts: vec![16, 32],
            points: 10,
            min_time: Duration::from_millis(1),
            ..BenchConfig::default()
        };
        let rows = run_bench(&ext, &cfg).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.ns_per_point > 0.0));
        assert!(rows[2].max_error < rows[1].max_error);
        let mut csv = Vec::new();
        write_bench_csv(&rows, &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);
        assert!(run_bench(&ext, &BenchConfig { warmup: 0, ..cfg }).is_err());
    }

    #[test]
    fn points_are_reproducible() {
        assert_eq!(random_unit_points(5, 7), random_unit_points(5, 7));
        assert_ne!(random_unit_points(5, 7), random_unit_points(5, 8));
    }
}

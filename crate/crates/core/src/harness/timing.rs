//! Wall-clock cost of one element-wise moment pass versus reservoir size.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use crate::error::Result;
use crate::gaussian::{DiagonalGaussian, RngStream};
use crate::moments::{build_spline_table, Activation, Engine, SplineTable};

use super::config::TimingConfig;
use super::output::{cell, Table};

/// Median seconds per pass for one method and size.
#[derive(Clone, Debug, PartialEq)]
pub struct TimingRow {
    pub method: String,
    pub size: usize,
    pub median_seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimingResult {
    pub rows: Vec<TimingRow>,
    /// Seconds to build the default spline table, not included in the rows.
    pub table_build_seconds: f64,
    /// Spline time with twice the mesh points over the default, at the largest size.
    pub doubling_ratio: Option<f64>,
}

impl TimingResult {
    #[must_use]
    pub fn methods(&self) -> Vec<String> {
        let mut m: Vec<String> = Vec::new();
        for r in &self.rows {
            if !m.contains(&r.method) {
                m.push(r.method.clone());
            }
        }
        m
    }

    #[must_use]
    pub fn series(&self, method: &str) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.method == method)
            .map(|r| (r.size, r.median_seconds))
            .collect()
    }

    /// R^2 of a least-squares line through time versus size.
    #[must_use]
    pub fn linear_r2(&self, method: &str) -> f64 {
        let pts: Vec<(f64, f64)> = self.series(method).iter().map(|&(d, t)| (d as f64, t)).collect();
        r_squared(&pts)
    }

    #[must_use]
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["method", "size", "median_seconds"]);
        for r in &self.rows {
            t.push(vec![r.method.clone(), r.size.to_string(), cell(r.median_seconds)]);
        }
        t
    }
}

/// Coefficient of determination of the least-squares line through `pts`.
#[must_use]
pub fn r_squared(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn time_pass(engine: &Engine, x: &DiagonalGaussian, repeats: usize) -> Result<f64> {
    std::hint::black_box(engine.propagate(Activation::Tanh, x, 0)?);
    let mut times = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let t0 = Instant::now();
        let out = engine.propagate(Activation::Tanh, std::hint::black_box(x), r as u64)?;
        times.push(t0.elapsed().as_secs_f64());
        std::hint::black_box(out);
    }
    Ok(median(times))
}

fn timed_table(n_points: usize, cfg: &TimingConfig) -> Result<(Arc<SplineTable>, f64)> {
    let t0 = Instant::now();
    let table = build_spline_table(Activation::Tanh, cfg.mesh.a, cfg.mesh.b, n_points, 2)?;
    Ok((Arc::new(table), t0.elapsed().as_secs_f64()))
}

/// Times analytic, spline and Monte Carlo passes over beliefs of each size.
/// Runs serially so timings do not compete for cores.
pub fn run_timing_bench(cfg: &TimingConfig, seed: u64) -> Result<TimingResult> {
    let (table, table_build_seconds) = timed_table(cfg.mesh.n_points, cfg)?;
    let doubled = if cfg.doubled_mesh {
        Some(timed_table(2 * cfg.mesh.n_points, cfg)?.0)
    } else {
        None
    };
    let engines = [
        ("analytic".to_string(), Engine::Analytic),
        (format!("spline_{}", cfg.mesh.n_points), Engine::Spline(table)),
        (
            format!("mc_{}", cfg.mc_samples),
            Engine::MonteCarlo { samples: cfg.mc_samples, stream: RngStream::new(seed).substream(1) },
        ),
    ];
    let mut g = RngStream::new(seed).substream(0).rng();
    let mut rows = Vec::new();
    let mut doubling_ratio = None;
    let largest = cfg.sizes.iter().copied().max().unwrap_or(0);
    for &d in &cfg.sizes {
        let mean: Vec<f64> = (0..d).map(|_| g.random_range(-3.0..3.0)).collect();
        let var: Vec<f64> = (0..d).map(|_| g.random_range(0.05..1.0)).collect();
        let x = DiagonalGaussian::new(mean, var)?;
        for (name, engine) in &engines {
            let t = time_pass(engine, &x, cfg.repeats)?;
            rows.push(TimingRow { method: name.clone(), size: d, median_seconds: t });
        }
        if let (Some(t2), true) = (&doubled, d == largest) {
            let base = rows
                .iter()
                .rev()
                .find(|r| r.method.starts_with("spline") && r.size == d)
                .map(|r| r.median_seconds);
            let t = time_pass(&Engine::Spline(t2.clone()), &x, cfg.repeats)?;
            doubling_ratio = base.map(|b| t / b);
        }
    }
    Ok(TimingResult { rows, table_build_seconds, doubling_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r2_of_exact_line() {
        assert!((r_squared(&[(1.0, 2.0), (2.0, 4.0), (3.0, 6.0)]) - 1.0).abs() < 1e-12);
        assert!(r_squared(&[(1.0, 1.0), (2.0, 3.0), (3.0, 1.0)]) < 0.1);
        assert_eq!(median(vec![3.0, 1.0, 2.0, 10.0]), 2.5);
    }

    #[test]
    fn tiny_bench_runs() {
        let cfg = TimingConfig { sizes: vec![10, 20], repeats: 3, mc_samples: 100, ..TimingConfig::default() };
        let r = run_timing_bench(&cfg, 1).unwrap();
        assert_eq!(r.rows.len(), 6);
        assert_eq!(r.methods(), vec!["analytic", "spline_101", "mc_100"]);
        assert!(r.doubling_ratio.is_some());
        assert_eq!(r.to_table().rows.len(), 6);
    }
}

//! Belief propagation through random `tanh` feed-forward networks, scored
//! per layer against Monte Carlo.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{linear_transform, standard_normal, DiagonalGaussian, Gaussian1D, RngStream};
use crate::moments::{build_spline_table, Activation, Engine, EngineKind};

use super::config::{FfnnConfig, NetworkSpec};
use super::output::{cell, Table};

const CHUNK: usize = 1000;

/// Dense layers; every layer but the last applies `tanh`. Biases are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub layers: Vec<DMatrix<f64>>,
}

impl Network {
    /// Standard normal weights, scaled by `1/sqrt(fan_in)` when `scaled`.
    pub fn random(input_dim: usize, hidden: &[usize], scaled: bool, rng: &RngStream) -> Result<Self> {
        if input_dim == 0 || hidden.is_empty() || hidden.contains(&0) {
            return Err(Error::Config("network needs positive widths".into()));
        }
        let mut g = rng.rng();
        let mut fan_in = input_dim;
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        for &out in hidden.iter().chain(std::iter::once(&1)) {
            let s = if scaled { 1.0 / (fan_in as f64).sqrt() } else { 1.0 };
            layers.push(DMatrix::from_fn(out, fan_in, |_, _| s * standard_normal(&mut g)));
            fan_in = out;
        }
        Ok(Self { layers })
    }

    /// Belief after each layer.
    pub fn propagate(&self, engine: &Engine, x: &DiagonalGaussian) -> Result<Vec<DiagonalGaussian>> {
        let mut out = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        let last = self.layers.len() - 1;
        let mut call = 0u64;
        for (l, w) in self.layers.iter().enumerate() {
            let a = linear_transform(&cur, w, &vec![0.0; w.nrows()])?;
            cur = if l == last {
                a
            } else {
                let r = engine.propagate(Activation::Tanh, &a, call)?;
                call += w.nrows() as u64;
                r
            };
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// Values after each layer for one input.
    #[must_use]
    pub fn forward(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        let mut out = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        let last = self.layers.len() - 1;
        for (l, w) in self.layers.iter().enumerate() {
            cur = w * &cur;
            if l != last {
                cur.apply(|v| *v = v.tanh());
            }
            out.push(cur.clone());
        }
        out
    }
}

#[derive(Clone, Debug, Default)]
struct Welford {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(d: usize) -> Self {
        Self { n: 0.0, mean: vec![0.0; d], m2: vec![0.0; d] }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1.0;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let d = v - *m;
            *m += d / self.n;
            *s += d * (v - *m);
        }
    }

    fn merge(&mut self, o: &Self) {
        let n = self.n + o.n;
        for i in 0..self.mean.len() {
            let d = o.mean[i] - self.mean[i];
            self.mean[i] += d * o.n / n;
            self.m2[i] += o.m2[i] + d * d * self.n * o.n / n;
        }
        self.n = n;
    }

    fn into_gaussian(self) -> Result<DiagonalGaussian> {
        let var = self.m2.iter().map(|s| s / (self.n - 1.0)).collect();
        DiagonalGaussian::new(self.mean, var)
    }
}

/// Sample moments after each layer plus the raw output samples.
/// Chunk `c` of `CHUNK` samples draws from substream `c` of `rng`.
pub fn monte_carlo_layers(
    net: &Network,
    x: &DiagonalGaussian,
    n: usize,
    rng: &RngStream,
) -> Result<(Vec<DiagonalGaussian>, Vec<f64>)> {
    if n < 2 {
        return Err(Error::Config("Monte Carlo needs at least 2 samples".into()));
    }
    let widths: Vec<usize> = net.layers.iter().map(DMatrix::nrows).collect();
    let sd: Vec<f64> = x.variance().iter().map(|v| v.sqrt()).collect();
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<(Vec<Welford>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut g = rng.substream(c as u64).rng();
            let mut acc: Vec<Welford> = widths.iter().map(|&d| Welford::new(d)).collect();
            let m = CHUNK.min(n - c * CHUNK);
            let mut outputs = Vec::with_capacity(m);
            for _ in 0..m {
                let s = DVector::from_iterator(
                    x.dim(),
                    x.mean().iter().zip(&sd).map(|(mu, s)| mu + s * standard_normal(&mut g)),
                );
                let vals = net.forward(&s);
                for (a, v) in acc.iter_mut().zip(&vals) {
                    a.push(v.as_slice());
                }
                outputs.push(vals[vals.len() - 1][0]);
            }
            (acc, outputs)
        })
        .collect();
    let mut total: Vec<Welford> = widths.iter().map(|&d| Welford::new(d)).collect();
    let mut outputs = Vec::with_capacity(n);
    for (acc, out) in parts {
        for (t, a) in total.iter_mut().zip(&acc) {
            t.merge(a);
        }
        outputs.extend(out);
    }
    let layers = total.into_iter().map(Welford::into_gaussian).collect::<Result<_>>()?;
    Ok((layers, outputs))
}

/// Mean absolute moment differences for one engine at one layer (1-based;
/// the last layer is the linear output).
#[derive(Clone, Debug, PartialEq)]
pub struct LayerError {
    pub layer: usize,
    pub width: usize,
    pub engine: EngineKind,
    pub eps_mu: f64,
    pub eps_sigma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FfnnResult {
    pub network: String,
    pub layers: Vec<LayerError>,
    /// `(x, Monte Carlo, spline, analytic)` output CDF values.
    pub cdf: Vec<[f64; 4]>,
}

impl FfnnResult {
    #[must_use]
    pub fn errors(&self, engine: EngineKind) -> Vec<&LayerError> {
        self.layers.iter().filter(|l| l.engine == engine).collect()
    }

    #[must_use]
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["network", "layer", "width", "engine", "eps_mu", "eps_sigma"]);
        for l in &self.layers {
            t.push(vec![
                self.network.clone(),
                l.layer.to_string(),
                l.width.to_string(),
                l.engine.name().to_string(),
                cell(l.eps_mu),
                cell(l.eps_sigma),
            ]);
        }
        t
    }

    #[must_use]
    pub fn cdf_table(&self) -> Table {
        let mut t = Table::new(&["x", "mc", "spline", "analytic"]);
        for r in &self.cdf {
            t.push(r.iter().map(|&v| cell(v)).collect());
        }
        t
    }
}

fn layer_errors(engine: EngineKind, beliefs: &[DiagonalGaussian], truth: &[DiagonalGaussian]) -> Vec<LayerError> {
    beliefs
        .iter()
        .zip(truth)
        .enumerate()
        .map(|(l, (b, t))| {
            let d = b.dim() as f64;
            let avg = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>() / d;
            LayerError {
                layer: l + 1,
                width: b.dim(),
                engine,
                eps_mu: avg(b.mean(), t.mean()),
                eps_sigma: avg(b.variance(), t.variance()),
            }
        })
        .collect()
}

/// Propagates the configured input belief through one random network with
/// the spline and analytic engines and compares to Monte Carlo.
/// Substreams of `seed`: 0 weights, 1 Monte Carlo.
pub fn ffnn_propagate(cfg: &FfnnConfig, net_spec: &NetworkSpec, seed: u64) -> Result<FfnnResult> {
    let root = RngStream::new(seed);
    let net = Network::random(cfg.input_dim, &net_spec.hidden, cfg.scaled_weights, &root.substream(0))?;
    let x = DiagonalGaussian::isotropic(vec![cfg.input_mean; cfg.input_dim], cfg.input_variance)?;
    let table = build_spline_table(Activation::Tanh, cfg.mesh.a, cfg.mesh.b, cfg.mesh.n_points, 2)?;
    let spline = net.propagate(&Engine::Spline(Arc::new(table)), &x)?;
    let analytic = net.propagate(&Engine::Analytic, &x)?;
    let (truth, mut samples) = monte_carlo_layers(&net, &x, cfg.mc_samples, &root.substream(1))?;
    let mut layers = layer_errors(EngineKind::Spline, &spline, &truth);
    layers.extend(layer_errors(EngineKind::Analytic, &analytic, &truth));

    samples.sort_by(f64::total_cmp);
    let (lo, hi) = (samples[0], samples[samples.len() - 1]);
    let ys = spline.last().map(|b| b.get(0)).unwrap_or(Gaussian1D::point(0.0));
    let ya = analytic.last().map(|b| b.get(0)).unwrap_or(Gaussian1D::point(0.0));
    let k = cfg.cdf_points.max(2);
    let n = samples.len() as f64;
    let cdf = (0..k)
        .map(|i| {
            let xv = if i + 1 == k { hi } else { lo + (hi - lo) * i as f64 / (k - 1) as f64 };
            let emp = samples.partition_point(|&s| s <= xv) as f64 / n;
            [xv, emp, ys.cdf(xv), ya.cdf(xv)]
        })
        .collect();
    Ok(FfnnResult { network: net_spec.name.clone(), layers, cdf })
}

//! Echo state network carrying a diagonal Gaussian belief over its state.
//!
//! Pre-activations are propagated linearly, `tanh` is moment-matched by a
//! pluggable [`Engine`], and all cross-covariances are dropped.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{DiagonalGaussian, RngStream};
use crate::linalg::{dense_mul_add, dense_mul_sq_add};
use crate::moments::{build_spline_table, Activation, Engine, EngineKind};
use crate::reservoir::{
    init_reservoir, regressor, train_batch, Dataset, EsnParams, EsnWeights, InputMap,
    PredictionMode, Readout, Rls, RolloutSpec,
};

/// Belief over the reservoir state.
#[derive(Clone, Debug, PartialEq)]
pub struct ReservoirBelief {
    pub h: DiagonalGaussian,
}

impl ReservoirBelief {
    #[must_use]
    pub fn new(h: DiagonalGaussian) -> Self {
        Self { h }
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.h.dim()
    }
}

/// Uniform spline mesh settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSpec {
    pub a: f64,
    pub b: f64,
    pub n_points: usize,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self { a: -10.0, b: 10.0, n_points: 101 }
    }
}

/// How the initial reservoir belief is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialBelief {
    /// Means drawn from `N(0, 1)`, every variance `variance`.
    Sampled { variance: f64 },
    /// Zero means, every variance `variance`.
    Centered { variance: f64 },
}

impl InitialBelief {
    pub fn build(&self, n: usize, rng: &RngStream) -> Result<ReservoirBelief> {
        let h = match *self {
            Self::Sampled { variance } => {
                let mut g = rng.rng();
                let mean = (0..n).map(|_| crate::gaussian::standard_normal(&mut g)).collect();
                DiagonalGaussian::isotropic(mean, variance)?
            }
            Self::Centered { variance } => DiagonalGaussian::isotropic(vec![0.0; n], variance)?,
        };
        Ok(ReservoirBelief::new(h))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PesnConfig {
    pub esn: EsnParams,
    pub engine: EngineKind,
    pub mesh: MeshSpec,
    /// Samples per element for the Monte Carlo engine.
    pub mc_samples: usize,
    /// Initial belief used for training (only its means matter there).
    pub initial: InitialBelief,
    /// Initial belief used before the prediction washout.
    pub predict_initial: InitialBelief,
    /// Add `M_e^2` instead of `M_e` to the state variance each step.
    pub noise_variance_squared: bool,
    /// Propagate only means during the prediction washout.
    pub mean_only_washout: bool,
}

impl Default for PesnConfig {
    fn default() -> Self {
        Self {
            esn: EsnParams::default(),
            engine: EngineKind::Spline,
            mesh: MeshSpec::default(),
            mc_samples: 10_000,
            initial: InitialBelief::Sampled { variance: 1.0 },
            predict_initial: InitialBelief::Centered { variance: 1.0 },
            noise_variance_squared: false,
            mean_only_washout: false,
        }
    }
}

impl PesnConfig {
    /// Builds the configured `tanh` moment engine. `rng` seeds the Monte Carlo engine.
    pub fn engine(&self, rng: &RngStream) -> Result<Engine> {
        Ok(match self.engine {
            EngineKind::Analytic => Engine::Analytic,
            EngineKind::Spline => Engine::Spline(Arc::new(build_spline_table(
                Activation::Tanh,
                self.mesh.a,
                self.mesh.b,
                self.mesh.n_points,
                2,
            )?)),
            EngineKind::Mc => Engine::MonteCarlo {
                samples: self.mc_samples,
                stream: *rng,
            },
        })
    }

    fn state_noise_variance(&self) -> f64 {
        if self.noise_variance_squared {
            self.esn.noise * self.esn.noise
        } else {
            self.esn.noise
        }
    }
}

/// Belief over the pre-activation `W_in z + W_fb y_prev + W h`.
pub fn activation_input_belief(
    z: &DiagonalGaussian,
    y_prev: &DiagonalGaussian,
    h: &ReservoirBelief,
    w: &EsnWeights,
) -> Result<DiagonalGaussian> {
    if z.dim() != w.input_dim() || y_prev.dim() != w.output_dim() || h.dim() != w.reservoir_size() {
        return Err(Error::Shape(format!(
            "belief sizes {}/{}/{} do not match {}/{}/{}",
            z.dim(),
            y_prev.dim(),
            h.dim(),
            w.input_dim(),
            w.output_dim(),
            w.reservoir_size()
        )));
    }
    let n = w.reservoir_size();
    let mut mean = w.w.mul_vec(h.h.mean());
    dense_mul_add(&w.w_in, z.mean(), &mut mean);
    dense_mul_add(&w.w_fb, y_prev.mean(), &mut mean);
    let mut var = vec![0.0; n];
    w.w.mul_sq_add(h.h.variance(), &mut var);
    dense_mul_sq_add(&w.w_in, z.variance(), &mut var);
    dense_mul_sq_add(&w.w_fb, y_prev.variance(), &mut var);
    DiagonalGaussian::new(mean, var)
}

/// One belief update. Returns the new reservoir belief and the `tanh` belief.
///
/// `call` keys the Monte Carlo engine's random streams; pass distinct values
/// for distinct steps.
pub fn pesn_step(
    h: &ReservoirBelief,
    z: &DiagonalGaussian,
    y_prev: &DiagonalGaussian,
    w: &EsnWeights,
    cfg: &PesnConfig,
    engine: &Engine,
    call: u64,
) -> Result<(ReservoirBelief, DiagonalGaussian)> {
    let a = activation_input_belief(z, y_prev, h, w)?;
    let t = engine.propagate(Activation::Tanh, &a, call.wrapping_mul(w.reservoir_size() as u64))?;
    let l = cfg.esn.leak;
    let q = cfg.state_noise_variance();
    let mean = h
        .h
        .mean()
        .iter()
        .zip(t.mean())
        .map(|(m, tm)| (1.0 - l) * m + l * tm)
        .collect();
    let var = h
        .h
        .variance()
        .iter()
        .zip(t.variance())
        .map(|(v, tv)| (1.0 - l) * (1.0 - l) * v + l * l * tv + q)
        .collect();
    Ok((ReservoirBelief::new(DiagonalGaussian::new(mean, var)?), t))
}

/// Output belief for `W_out [1; z; h]`, the constant carrying zero variance.
pub fn readout_belief(z: &DiagonalGaussian, h: &ReservoirBelief, w_out: &DMatrix<f64>) -> Result<DiagonalGaussian> {
    let one = DiagonalGaussian::point(vec![1.0]);
    let b = DiagonalGaussian::concat(&[&one, z, &h.h]);
    crate::gaussian::linear_transform(&b, w_out, &vec![0.0; w_out.nrows()])
}

/// Draws the reservoir and fits the readout on means only.
///
/// With variances ignored the mean recursion is the deterministic network
/// started from the initial mean, so this is batch training from that state.
pub fn pesn_train(
    cfg: &PesnConfig,
    dims: (usize, usize),
    data: &Dataset,
    rng: &RngStream,
) -> Result<(EsnWeights, Readout)> {
    let weights = init_reservoir(&cfg.esn, dims, &rng.substream(0))?;
    let init = cfg.initial.build(weights.reservoir_size(), &rng.substream(1))?;
    let params = EsnParams { noise: 0.0, ..cfg.esn.clone() };
    let readout = train_batch(&weights, &params, data, init.h.mean(), None)?;
    let weights = weights.with_readout(readout.w_out.clone())?;
    Ok((weights, readout))
}

/// Beliefs produced by one probabilistic rollout.
#[derive(Clone, Debug)]
pub struct PesnPrediction {
    pub first_row: usize,
    pub outputs: Vec<DiagonalGaussian>,
    pub targets: Vec<Vec<f64>>,
    /// Beliefs over the tracked inputs of the following row (closed loop only).
    pub states: Vec<DiagonalGaussian>,
    pub state_targets: Vec<Vec<f64>>,
    /// Reservoir mean after each washout step.
    pub washout_means: Vec<Vec<f64>>,
    pub final_belief: ReservoirBelief,
    pub w_out: DMatrix<f64>,
}

impl PesnPrediction {
    /// Beliefs and true values on which errors are measured.
    #[must_use]
    pub fn scored(&self) -> (&[DiagonalGaussian], &[Vec<f64>]) {
        if self.states.is_empty() {
            (&self.outputs, &self.targets)
        } else {
            (&self.states, &self.state_targets)
        }
    }

    /// `|mean - truth|` per step and dimension.
    #[must_use]
    pub fn abs_errors(&self) -> Vec<Vec<f64>> {
        let (p, t) = self.scored();
        p.iter()
            .zip(t)
            .map(|(b, y)| b.mean().iter().zip(y).map(|(m, v)| (m - v).abs()).collect())
            .collect()
    }

    #[must_use]
    pub fn mean_abs_error(&self) -> Vec<f64> {
        let e = self.abs_errors();
        let n = e.len().max(1) as f64;
        let d = e.first().map_or(0, Vec::len);
        (0..d).map(|j| e.iter().map(|r| r[j]).sum::<f64>() / n).collect()
    }
}

fn next_input_belief(
    map: &InputMap,
    z: &DiagonalGaussian,
    y: &DiagonalGaussian,
    z_data: &[f64],
) -> Result<DiagonalGaussian> {
    let mean = map.next_input(z.mean(), y.mean(), z_data);
    let mut var = vec![0.0; mean.len()];
    dense_mul_sq_add(map.state_matrix(), z.variance(), &mut var);
    dense_mul_sq_add(map.feedback_matrix(), y.variance(), &mut var);
    for (i, v) in var.iter_mut().enumerate() {
        if map.is_exogenous(i) {
            *v = 0.0;
        }
    }
    DiagonalGaussian::new(mean, var)
}

fn with_extra_variance(x: DiagonalGaussian, extra: &[f64]) -> Result<DiagonalGaussian> {
    if extra.is_empty() {
        return Ok(x);
    }
    let (m, mut v) = x.into_parts();
    v.iter_mut().zip(extra).for_each(|(a, b)| *a += b);
    DiagonalGaussian::new(m, v)
}

/// Probabilistic counterpart of [`crate::reservoir::esn_predict`].
///
/// The washout runs on exact data inputs. During prediction every input
/// belief gets `spec.input_noise` added to its variance. Single mode feeds
/// ground truth back with zero variance and, if enabled, updates the readout
/// on the means; multi mode feeds the output belief back and keeps the
/// readout fixed unless `spec.update_in_multi` is set.
pub fn pesn_predict(
    w: &EsnWeights,
    cfg: &PesnConfig,
    engine: &Engine,
    data: &Dataset,
    spec: &RolloutSpec,
    map: &InputMap,
    initial: &ReservoirBelief,
) -> Result<PesnPrediction> {
    crate::reservoir::check_rollout(spec, data, map)?;
    if initial.dim() != w.reservoir_size() {
        return Err(Error::Shape("initial belief does not match the reservoir".into()));
    }
    let mut belief = if cfg.mean_only_washout {
        ReservoirBelief::new(initial.h.collapsed())
    } else {
        initial.clone()
    };
    let mut call = 0u64;
    let mut washout_means = Vec::with_capacity(spec.washout);
    for r in spec.start..spec.first_prediction_row() {
        let z = DiagonalGaussian::point(data.input(r).to_vec());
        let y = DiagonalGaussian::point(data.previous_target(r));
        belief = pesn_step(&belief, &z, &y, w, cfg, engine, call)?.0;
        if cfg.mean_only_washout {
            belief = ReservoirBelief::new(belief.h.collapsed());
        }
        call += 1;
        washout_means.push(belief.h.mean().to_vec());
    }

    let mut w_out = w.w_out.clone();
    let mut rls = if spec.rls && (spec.mode == PredictionMode::Single || spec.update_in_multi) {
        Some(Rls::new(w.regressor_dim(), cfg.esn.rls_delta, cfg.esn.rls_lambda)?)
    } else {
        None
    };
    let tracked = map.tracked();
    let first = spec.first_prediction_row();
    let mut out = PesnPrediction {
        first_row: first,
        outputs: Vec::with_capacity(spec.horizon),
        targets: Vec::with_capacity(spec.horizon),
        states: Vec::new(),
        state_targets: Vec::new(),
        washout_means,
        final_belief: belief.clone(),
        w_out: DMatrix::zeros(0, 0),
    };
    let mut z_prev: Option<DiagonalGaussian> = None;
    let mut y_prev: Option<DiagonalGaussian> = None;
    for i in 0..spec.horizon {
        let r = first + i;
        let free = spec.mode == PredictionMode::Multi && i > 0;
        let (z_nominal, y_fb) = match (free, &z_prev, &y_prev) {
            (true, Some(zp), Some(yp)) => (next_input_belief(map, zp, yp, data.input(r))?, yp.clone()),
            _ => (
                DiagonalGaussian::point(data.input(r).to_vec()),
                DiagonalGaussian::point(data.previous_target(r)),
            ),
        };
        let z = with_extra_variance(z_nominal, &spec.input_noise)?;
        belief = pesn_step(&belief, &z, &y_fb, w, cfg, engine, call)?.0;
        call += 1;
        let y = readout_belief(&z, &belief, &w_out)?;
        if map.is_closed_loop() {
            let next = next_input_belief(map, &z, &y, data.input(r + 1))?;
            let (m, v) = next.into_parts();
            out.states.push(DiagonalGaussian::new(
                tracked.iter().map(|&j| m[j]).collect(),
                tracked.iter().map(|&j| v[j]).collect(),
            )?);
            out.state_targets
                .push(tracked.iter().map(|&j| data.input(r + 1)[j]).collect());
        }
        if let Some(state) = rls.as_mut() {
            let b = regressor(z.mean(), belief.h.mean());
            state.update(&mut w_out, &b, data.target(r))?;
        }
        out.outputs.push(y.clone());
        out.targets.push(data.target(r).to_vec());
        z_prev = Some(z);
        y_prev = Some(y);
    }
    out.final_belief = belief;
    out.w_out = w_out;
    Ok(out)
}

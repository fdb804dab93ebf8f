//! Washout, single/multi-step prediction and random-initialization ensembles.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::readout::{random_state, regressor, Rls};
use super::{esn_step, Dataset, EsnParams, EsnWeights};
use crate::error::{Error, Result};
use crate::gaussian::{standard_normal, RngStream};
use crate::linalg::dense_mul_add;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionMode {
    /// Ground truth is fed back every step.
    Single,
    /// Predictions are fed back; the network runs free.
    Multi,
}

/// How the next network input is formed from the previous input and the
/// predicted output when running free:
/// `z_next = A z + B y` on tracked columns, data on exogenous columns.
#[derive(Clone, Debug, PartialEq)]
pub struct InputMap {
    state: DMatrix<f64>,
    feedback: DMatrix<f64>,
    exogenous: Vec<bool>,
}

impl InputMap {
    pub fn new(state: DMatrix<f64>, feedback: DMatrix<f64>, exogenous: Vec<bool>) -> Result<Self> {
        let n = exogenous.len();
        if state.shape() != (n, n) || feedback.nrows() != n {
            return Err(Error::Shape("input map blocks disagree on the input dimension".into()));
        }
        Ok(Self { state, feedback, exogenous })
    }

    /// Every input comes from the data; nothing is predicted.
    #[must_use]
    pub fn open_loop(n_inputs: usize, n_outputs: usize) -> Self {
        Self {
            state: DMatrix::zeros(n_inputs, n_inputs),
            feedback: DMatrix::zeros(n_inputs, n_outputs),
            exogenous: vec![true; n_inputs],
        }
    }

    #[must_use]
    pub fn input_dim(&self) -> usize {
        self.exogenous.len()
    }

    #[must_use]
    pub fn output_dim(&self) -> usize {
        self.feedback.ncols()
    }

    #[must_use]
    pub fn state_matrix(&self) -> &DMatrix<f64> {
        &self.state
    }

    #[must_use]
    pub fn feedback_matrix(&self) -> &DMatrix<f64> {
        &self.feedback
    }

    #[must_use]
    pub fn is_exogenous(&self, i: usize) -> bool {
        self.exogenous[i]
    }

    /// Indices of the predicted (non-exogenous) input columns.
    #[must_use]
    pub fn tracked(&self) -> Vec<usize> {
        (0..self.exogenous.len()).filter(|&i| !self.exogenous[i]).collect()
    }

    #[must_use]
    pub fn is_closed_loop(&self) -> bool {
        self.exogenous.iter().any(|e| !e)
    }

    #[must_use]
    pub fn next_input(&self, z: &[f64], y: &[f64], z_data: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.exogenous.len()];
        dense_mul_add(&self.state, z, &mut out);
        dense_mul_add(&self.feedback, y, &mut out);
        for (i, o) in out.iter_mut().enumerate() {
            if self.exogenous[i] {
                *o = z_data[i];
            }
        }
        out
    }
}

/// Where and how to predict.
#[derive(Clone, Debug, PartialEq)]
pub struct RolloutSpec {
    /// First washout row.
    pub start: usize,
    pub washout: usize,
    pub horizon: usize,
    pub mode: PredictionMode,
    /// Update the readout online against ground truth (single mode).
    pub rls: bool,
    /// Also update during multi-step rollouts, using the recorded targets.
    pub update_in_multi: bool,
    /// Variance of Gaussian noise added to each network input during
    /// prediction; empty for none.
    pub input_noise: Vec<f64>,
}

impl RolloutSpec {
    #[must_use]
    pub fn new(start: usize, washout: usize, horizon: usize, mode: PredictionMode) -> Self {
        Self {
            start,
            washout,
            horizon,
            mode,
            rls: false,
            update_in_multi: false,
            input_noise: Vec::new(),
        }
    }

    #[must_use]
    pub fn first_prediction_row(&self) -> usize {
        self.start + self.washout
    }

    fn check(&self, data: &Dataset, map: &InputMap) -> Result<()> {
        let end = self.first_prediction_row() + self.horizon + usize::from(map.is_closed_loop());
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if end > data.len() {
            return Err(Error::Config(format!(
                "rollout needs rows up to {end} but the dataset has {}",
                data.len()
            )));
        }
        if map.input_dim() != data.input_dim() || map.output_dim() != data.output_dim() {
            return Err(Error::Shape("input map does not match the dataset".into()));
        }
        if !self.input_noise.is_empty() && self.input_noise.len() != data.input_dim() {
            return Err(Error::Shape("input noise needs one variance per input".into()));
        }
        if self.input_noise.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Config("input noise variances must be >= 0".into()));
        }
        Ok(())
    }

    fn updates(&self) -> bool {
        self.rls && (self.mode == PredictionMode::Single || self.update_in_multi)
    }
}

/// Validates `spec` against the dataset and input map.
pub(crate) fn check_rollout(spec: &RolloutSpec, data: &Dataset, map: &InputMap) -> Result<()> {
    spec.check(data, map)
}

/// One rollout's outputs and errors.
#[derive(Clone, Debug)]
pub struct Prediction {
    pub first_row: usize,
    pub outputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    /// Predicted tracked inputs for the row after each step (closed loop only).
    pub states: Vec<Vec<f64>>,
    pub state_targets: Vec<Vec<f64>>,
    /// Reservoir states visited during the washout.
    pub washout_states: Vec<Vec<f64>>,
    pub final_state: Vec<f64>,
    pub w_out: DMatrix<f64>,
}

impl Prediction {
    /// Predicted and true values on which errors are measured: tracked
    /// inputs under a closed-loop map, outputs otherwise.
    #[must_use]
    pub fn scored(&self) -> (&[Vec<f64>], &[Vec<f64>]) {
        if self.states.is_empty() {
            (&self.outputs, &self.targets)
        } else {
            (&self.states, &self.state_targets)
        }
    }

    /// `|prediction - truth|` per step and dimension.
    #[must_use]
    pub fn abs_errors(&self) -> Vec<Vec<f64>> {
        let (p, t) = self.scored();
        p.iter()
            .zip(t)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect())
            .collect()
    }

    /// Mean absolute error over the horizon, per dimension.
    #[must_use]
    pub fn mean_abs_error(&self) -> Vec<f64> {
        mean_rows(&self.abs_errors())
    }
}

pub(crate) fn mean_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len().max(1) as f64;
    let d = rows.first().map_or(0, Vec::len);
    (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect()
}

/// Runs the washout from `h0`, then predicts `spec.horizon` steps.
///
/// `rng` drives state noise (`params.noise > 0`) and input noise; it may be
/// `None` when both are off.
pub fn esn_predict(
    weights: &EsnWeights,
    params: &EsnParams,
    data: &Dataset,
    h0: &[f64],
    spec: &RolloutSpec,
    map: &InputMap,
    rng: Option<&RngStream>,
) -> Result<Prediction> {
    spec.check(data, map)?;
    let noisy = params.noise > 0.0 || spec.input_noise.iter().any(|&v| v > 0.0);
    if noisy && rng.is_none() {
        return Err(Error::Config("noise is enabled but no random stream was given".into()));
    }
    let mut g = rng.map(RngStream::rng);
    let mut h = h0.to_vec();
    let mut washout_states = Vec::with_capacity(spec.washout);
    for r in spec.start..spec.first_prediction_row() {
        h = esn_step(&h, data.input(r), &data.previous_target(r), weights, params, g.as_mut())?;
        washout_states.push(h.clone());
    }

    let mut w_out = weights.w_out.clone();
    let mut rls = if spec.updates() {
        Some(Rls::new(weights.regressor_dim(), params.rls_delta, params.rls_lambda)?)
    } else {
        None
    };
    let tracked = map.tracked();
    let first = spec.first_prediction_row();
    let mut out = Prediction {
        first_row: first,
        outputs: Vec::with_capacity(spec.horizon),
        targets: Vec::with_capacity(spec.horizon),
        states: Vec::new(),
        state_targets: Vec::new(),
        washout_states,
        final_state: Vec::new(),
        w_out: DMatrix::zeros(0, 0),
    };
    let mut z_prev: Vec<f64> = Vec::new();
    let mut y_hat: Vec<f64> = Vec::new();
    for i in 0..spec.horizon {
        let r = first + i;
        let free = spec.mode == PredictionMode::Multi && i > 0;
        let mut z = if free {
            map.next_input(&z_prev, &y_hat, data.input(r))
        } else {
            data.input(r).to_vec()
        };
        if let Some(gr) = g.as_mut() {
            for (zj, &v) in z.iter_mut().zip(&spec.input_noise) {
                if v > 0.0 {
                    *zj += v.sqrt() * standard_normal(gr);
                }
            }
        }
        let y_prev = if free { y_hat.clone() } else { data.previous_target(r) };
        h = esn_step(&h, &z, &y_prev, weights, params, g.as_mut())?;
        let b = regressor(&z, &h);
        let mut y = vec![0.0; weights.output_dim()];
        dense_mul_add(&w_out, &b, &mut y);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: i });
        }
        if map.is_closed_loop() {
            let next = map.next_input(&z, &y, data.input(r + 1));
            out.states.push(tracked.iter().map(|&j| next[j]).collect());
            out.state_targets
                .push(tracked.iter().map(|&j| data.input(r + 1)[j]).collect());
        }
        if let Some(state) = rls.as_mut() {
            state.update(&mut w_out, &b, data.target(r))?;
        }
        out.outputs.push(y.clone());
        out.targets.push(data.target(r).to_vec());
        z_prev = z;
        y_hat = y;
    }
    out.final_state = h;
    out.w_out = w_out;
    Ok(out)
}

/// Mean, minimum and maximum of a per-trial quantity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl ErrorStats {
    #[must_use]
    pub fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        Self {
            mean: values.iter().sum::<f64>() / n,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Rollouts of the deterministic network from independent random initial states.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub trials: Vec<Prediction>,
}

impl Ensemble {
    /// Statistics over trials of each trial's mean absolute error, per dimension.
    #[must_use]
    pub fn error_stats(&self) -> Vec<ErrorStats> {
        let per_trial: Vec<Vec<f64>> = self.trials.iter().map(Prediction::mean_abs_error).collect();
        let d = per_trial.first().map_or(0, Vec::len);
        (0..d)
            .map(|j| ErrorStats::of(&per_trial.iter().map(|t| t[j]).collect::<Vec<_>>()))
            .collect()
    }

    /// Across-trial mean and unbiased variance of the outputs at each step.
    #[must_use]
    pub fn output_moments(&self) -> Vec<Vec<(f64, f64)>> {
        self.moments_of(|p| &p.outputs)
    }

    /// Across-trial mean and variance of the scored quantity at each step.
    #[must_use]
    pub fn scored_moments(&self) -> Vec<Vec<(f64, f64)>> {
        self.moments_of(|p| p.scored().0)
    }

    fn moments_of<'a>(&'a self, pick: impl Fn(&'a Prediction) -> &'a [Vec<f64>]) -> Vec<Vec<(f64, f64)>> {
        let Some(first) = self.trials.first() else {
            return Vec::new();
        };
        let steps = pick(first).len();
        let n = self.trials.len() as f64;
        (0..steps)
            .map(|k| {
                let d = pick(first)[k].len();
                (0..d)
                    .map(|j| {
                        let vals: Vec<f64> = self.trials.iter().map(|t| pick(t)[k][j]).collect();
                        let mean = vals.iter().sum::<f64>() / n;
                        let var = if vals.len() > 1 {
                            vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
                        } else {
                            0.0
                        };
                        (mean, var)
                    })
                    .collect()
            })
            .collect()
    }
}

/// `n_trials` rollouts, each from a fresh `h0 ~ N(0, I)`. Trial `t` uses
/// substreams `2t` (initial state) and `2t + 1` (noise) of `rng`, so the
/// result does not depend on thread count.
pub fn mc_ensemble_rollout(
    weights: &EsnWeights,
    params: &EsnParams,
    data: &Dataset,
    spec: &RolloutSpec,
    map: &InputMap,
    n_trials: usize,
    rng: &RngStream,
) -> Result<Ensemble> {
    if n_trials == 0 {
        return Err(Error::Config("ensemble needs at least one trial".into()));
    }
    let trials = (0..n_trials as u64)
        .into_par_iter()
        .map(|t| {
            let h0 = random_state(weights.reservoir_size(), &rng.substream(2 * t));
            esn_predict(weights, params, data, &h0, spec, map, Some(&rng.substream(2 * t + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble { trials })
}

//! Washout-length sweeps: prediction error and hidden-state entropy of the
//! probabilistic network against an ensemble of deterministic ones.

use crate::cartpole::{input_map, make_dataset, INPUT_NAMES};
use crate::error::{Error, Result};
use crate::gaussian::RngStream;
use crate::probabilistic::{pesn_predict, pesn_train, PesnPrediction};
use crate::reservoir::{mc_ensemble_rollout, Ensemble, ErrorStats, PredictionMode, RolloutSpec};

use super::config::{ExperimentConfig, HistogramSpec};
use super::entropy::shannon_entropy;
use super::output::{cell, Table};

/// Both predictors after one washout length.
#[derive(Clone, Debug)]
pub struct LengthRun {
    pub length: usize,
    pub pesn: PesnPrediction,
    pub ensemble: Ensemble,
}

/// All lengths for one master seed, sharing weights and data.
#[derive(Clone, Debug)]
pub struct WashoutRuns {
    pub seed: u64,
    /// Names of the scored dimensions.
    pub dims: Vec<String>,
    pub runs: Vec<LengthRun>,
}

/// Per length and dimension: PESN error statistics over the horizon steps and
/// ensemble statistics over trials of each trial's mean error.
#[derive(Clone, Debug, PartialEq)]
pub struct WashoutRow {
    pub length: usize,
    pub dim: String,
    pub pesn: ErrorStats,
    pub mc: ErrorStats,
}

/// Per length: entropy of the pooled PESN washout means and of each
/// ensemble trial's washout states.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyRow {
    pub length: usize,
    pub pesn: f64,
    pub mc: ErrorStats,
}

/// Trains once, then predicts after every washout length.
///
/// Every length predicts the same window, which starts at
/// `test_start + max(lengths)`; the washout for length `W` covers the `W`
/// rows just before it. Substreams of `seed`: 0 weights, 1 engine,
/// 2 ensemble, 3 initial belief.
pub fn washout_runs(cfg: &ExperimentConfig, seed: u64) -> Result<WashoutRuns> {
    let wc = &cfg.washout;
    let data = make_dataset(&cfg.data, seed)?.dataset;
    let master = RngStream::new(seed);
    let dims = (data.input_dim(), data.output_dim());
    let (w, _) = pesn_train(&cfg.pesn, dims, &data, &master.substream(0))?;
    let engine = cfg.pesn.engine(&master.substream(1))?;
    let map = input_map(&cfg.data.physics);
    let longest = *wc.lengths.last().ok_or_else(|| Error::Config("no washout lengths".into()))?;
    let window = data.split().test_start() + longest;
    let initial = cfg.pesn.predict_initial.build(w.reservoir_size(), &master.substream(3))?;
    let mut runs = Vec::with_capacity(wc.lengths.len());
    for &length in &wc.lengths {
        let spec = RolloutSpec::new(window - length, length, wc.horizon, PredictionMode::Multi);
        let ensemble =
            mc_ensemble_rollout(&w, &cfg.pesn.esn, &data, &spec, &map, wc.trials, &master.substream(2))?;
        let pesn = pesn_predict(&w, &cfg.pesn, &engine, &data, &spec, &map, &initial)?;
        runs.push(LengthRun { length, pesn, ensemble });
    }
    let dims = map.tracked().iter().map(|&j| INPUT_NAMES.get(j).map_or(format!("z{j}"), |s| s.to_string())).collect();
    Ok(WashoutRuns { seed, dims, runs })
}

impl WashoutRuns {
    #[must_use]
    pub fn washout_rows(&self) -> Vec<WashoutRow> {
        let mut rows = Vec::new();
        for run in &self.runs {
            let errs = run.pesn.abs_errors();
            let mc = run.ensemble.error_stats();
            for (j, name) in self.dims.iter().enumerate() {
                let col: Vec<f64> = errs.iter().map(|e| e[j]).collect();
                rows.push(WashoutRow { length: run.length, dim: name.clone(), pesn: ErrorStats::of(&col), mc: mc[j] });
            }
        }
        rows
    }

    pub fn entropy_rows(&self, hist: &HistogramSpec) -> Result<Vec<EntropyRow>> {
        self.runs
            .iter()
            .map(|run| {
                let pooled: Vec<f64> = run.pesn.washout_means.iter().flatten().copied().collect();
                let per_trial = run
                    .ensemble
                    .trials
                    .iter()
                    .map(|t| {
                        let s: Vec<f64> = t.washout_states.iter().flatten().copied().collect();
                        shannon_entropy(&s, hist)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(EntropyRow { length: run.length, pesn: shannon_entropy(&pooled, hist)?, mc: ErrorStats::of(&per_trial) })
            })
            .collect()
    }
}

/// Washout-length error table for one master seed.
pub fn run_washout_experiment(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<WashoutRow>> {
    Ok(washout_runs(cfg, seed)?.washout_rows())
}

/// Washout entropy table for one master seed.
pub fn run_entropy_experiment(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<EntropyRow>> {
    washout_runs(cfg, seed)?.entropy_rows(&cfg.washout.histogram)
}

/// Number of lengths at which the PESN mean error is at most the ensemble's, per dimension.
#[must_use]
pub fn pesn_wins(rows: &[WashoutRow]) -> Vec<(String, usize, usize)> {
    let mut out: Vec<(String, usize, usize)> = Vec::new();
    for r in rows {
        let i = match out.iter().position(|o| o.0 == r.dim) {
            Some(i) => i,
            None => {
                out.push((r.dim.clone(), 0, 0));
                out.len() - 1
            }
        };
        out[i].2 += 1;
        if r.pesn.mean <= r.mc.mean {
            out[i].1 += 1;
        }
    }
    out
}

#[must_use]
pub fn washout_table(rows: &[WashoutRow]) -> Table {
    let mut t = Table::new(&[
        "washout", "dim", "pesn_mean", "pesn_min", "pesn_max", "mc_mean", "mc_min", "mc_max",
    ]);
    for r in rows {
        t.push(vec![
            r.length.to_string(),
            r.dim.clone(),
            cell(r.pesn.mean),
            cell(r.pesn.min),
            cell(r.pesn.max),
            cell(r.mc.mean),
            cell(r.mc.min),
            cell(r.mc.max),
        ]);
    }
    t
}

#[must_use]
pub fn entropy_table(rows: &[EntropyRow]) -> Table {
    let mut t = Table::new(&["washout", "pesn", "mc_mean", "mc_min", "mc_max"]);
    for r in rows {
        t.push(vec![r.length.to_string(), cell(r.pesn), cell(r.mc.mean), cell(r.mc.min), cell(r.mc.max)]);
    }
    t
}

//! Single- and multi-step cart-pole prediction with noisy state inputs:
//! PESN mean and 2-sigma band next to the spread of a deterministic ensemble.

use crate::cartpole::{input_map, make_dataset, INPUT_NAMES};
use crate::error::Result;
use crate::gaussian::RngStream;
use crate::probabilistic::{pesn_predict, pesn_train};
use crate::reservoir::{mc_ensemble_rollout, PredictionMode, RolloutSpec};

use super::config::ExperimentConfig;
use super::output::{cell, Table};

/// One step of one scored dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct BandRow {
    pub step: usize,
    pub dim: String,
    pub truth: f64,
    pub pesn_mean: f64,
    pub pesn_2sd: f64,
    pub mc_mean: f64,
    pub mc_2sd: f64,
}

impl BandRow {
    /// PESN mean inside the ensemble's 2-sigma band.
    #[must_use]
    pub fn contained(&self) -> bool {
        (self.pesn_mean - self.mc_mean).abs() <= self.mc_2sd
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelLearningResult {
    pub single: Vec<BandRow>,
    pub multi: Vec<BandRow>,
}

impl ModelLearningResult {
    /// Whether every dimension is contained at each of the first `steps` steps.
    #[must_use]
    pub fn multi_contained_for(&self, steps: usize) -> bool {
        self.multi.iter().filter(|r| r.step < steps).all(BandRow::contained)
    }

    /// Fraction of single-step rows with the PESN mean inside the band.
    #[must_use]
    pub fn single_containment(&self) -> f64 {
        let n = self.single.len().max(1) as f64;
        self.single.iter().filter(|r| r.contained()).count() as f64 / n
    }
}

/// Predicts from the start of the test split after the configured washout.
/// Substreams of `seed`: 0 weights, 1 engine, 2 ensemble, 3 initial belief.
pub fn run_model_learning(cfg: &ExperimentConfig, seed: u64) -> Result<ModelLearningResult> {
    let ml = &cfg.model_learning;
    let data = make_dataset(&cfg.data, seed)?.dataset;
    let master = RngStream::new(seed);
    let (w, _) = pesn_train(&cfg.pesn, (data.input_dim(), data.output_dim()), &data, &master.substream(0))?;
    let engine = cfg.pesn.engine(&master.substream(1))?;
    let map = input_map(&cfg.data.physics);
    let initial = cfg.pesn.predict_initial.build(w.reservoir_size(), &master.substream(3))?;
    let noise_var = ml.state_noise_std * ml.state_noise_std;
    let input_noise: Vec<f64> = (0..data.input_dim())
        .map(|j| if map.is_exogenous(j) { 0.0 } else { noise_var })
        .collect();
    let tracked = map.tracked();

    let run = |mode: PredictionMode, horizon: usize| -> Result<Vec<BandRow>> {
        let mut spec = RolloutSpec::new(data.split().test_start(), cfg.pesn.esn.washout, horizon, mode);
        spec.input_noise.clone_from(&input_noise);
        let ens = mc_ensemble_rollout(&w, &cfg.pesn.esn, &data, &spec, &map, ml.trials, &master.substream(2))?;
        let p = pesn_predict(&w, &cfg.pesn, &engine, &data, &spec, &map, &initial)?;
        let (beliefs, truth) = p.scored();
        let mc = ens.scored_moments();
        let mut rows = Vec::new();
        for (k, (b, t)) in beliefs.iter().zip(truth).enumerate() {
            for j in 0..b.dim() {
                let name = tracked
                    .get(j)
                    .and_then(|&i| INPUT_NAMES.get(i))
                    .map_or(format!("y{j}"), |s| s.to_string());
                rows.push(BandRow {
                    step: k,
                    dim: name,
                    truth: t[j],
                    pesn_mean: b.mean()[j],
                    pesn_2sd: 2.0 * b.variance()[j].sqrt(),
                    mc_mean: mc[k][j].0,
                    mc_2sd: 2.0 * mc[k][j].1.sqrt(),
                });
            }
        }
        Ok(rows)
    };
    Ok(ModelLearningResult {
        single: run(PredictionMode::Single, ml.single_steps)?,
        multi: run(PredictionMode::Multi, ml.multi_horizon)?,
    })
}

#[must_use]
pub fn band_table(rows: &[BandRow]) -> Table {
    let mut t = Table::new(&["step", "dim", "truth", "pesn_mean", "pesn_2sd", "mc_mean", "mc_2sd"]);
    for r in rows {
        t.push(vec![
            r.step.to_string(),
            r.dim.clone(),
            cell(r.truth),
            cell(r.pesn_mean),
            cell(r.pesn_2sd),
            cell(r.mc_mean),
            cell(r.mc_2sd),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_shapes() {
        let mut cfg = ExperimentConfig::default();
        cfg.pesn.esn.reservoir_size = 20;
        cfg.data.train = 300;
        cfg.data.test = 60;
        cfg.pesn.esn.washout = 20;
        cfg.model_learning.trials = 5;
        cfg.model_learning.single_steps = 6;
        cfg.model_learning.multi_horizon = 4;
        let r = run_model_learning(&cfg, 1).unwrap();
        assert_eq!(r.single.len(), 6 * 4);
        assert_eq!(r.multi.len(), 4 * 4);
        assert!(r.multi.iter().all(|b| b.pesn_2sd >= 0.0 && b.mc_2sd >= 0.0));
        assert_eq!(band_table(&r.multi).rows.len(), 16);
    }
}

//! Multi-step cart-pole prediction with a belief over the reservoir state.

use pesn::cartpole::{input_map, make_dataset, DataSpec};
use pesn::probabilistic::{pesn_predict, pesn_train, PesnConfig};
use pesn::reservoir::{PredictionMode, RolloutSpec};
use pesn::RngStream;

fn main() -> pesn::Result<()> {
    let spec = DataSpec::default();
    let data = make_dataset(&spec, 5)?.dataset;
    let cfg = PesnConfig::default();
    let (w, _) = pesn_train(&cfg, (5, 2), &data, &RngStream::new(5))?;
    let engine = cfg.engine(&RngStream::new(0))?;
    let initial = cfg.predict_initial.build(w.reservoir_size(), &RngStream::new(0))?;

    let mut rollout = RolloutSpec::new(data.split().test_start(), 100, 10, PredictionMode::Multi);
    rollout.input_noise = vec![1e-4, 1e-4, 1e-4, 1e-4, 0.0];
    let p = pesn_predict(&w, &cfg, &engine, &data, &rollout, &input_map(&spec.physics), &initial)?;
    println!("step   omega_true   omega_mean   2sd");
    for (k, (b, t)) in p.states.iter().zip(&p.state_targets).enumerate() {
        println!("{k:>4} {:>12.4} {:>12.4} {:>8.4}", t[3], b.mean()[3], 2.0 * b.variance()[3].sqrt());
    }
    Ok(())
}

//! A reduced washout and entropy sweep through the experiment harness.

use pesn::harness::config::WashoutConfig;
use pesn::harness::washout::{pesn_wins, washout_runs};
use pesn::harness::ExperimentConfig;

fn main() -> pesn::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.washout = WashoutConfig { lengths: vec![1, 10, 50, 200], trials: 20, ..WashoutConfig::default() };
    let runs = washout_runs(&cfg, 1)?;
    for (dim, wins, total) in pesn_wins(&runs.washout_rows()) {
        println!("{dim:>6}: PESN at least as accurate at {wins}/{total} lengths");
    }
    for e in runs.entropy_rows(&cfg.washout.histogram)? {
        println!("washout {:>3}: entropy PESN {:.3} bits, ensemble {:.3} bits", e.length, e.pesn, e.mc.mean);
    }
    Ok(())
}

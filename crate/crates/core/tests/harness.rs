mod support;

use std::process::Command;

use pesn::gaussian::{sample, standard_normal};
use pesn::harness::{
    ffnn_propagate, run_entropy_experiment, run_model_learning, run_moments_grid, run_washout_experiment,
    shannon_entropy, HistogramSpec,
};
use pesn::{DiagonalGaussian, RngStream};
use support::small_config;

#[test]
fn histogram_entropy_of_a_normal() {
    let n = 1_000_000;
    let s = sample(&DiagonalGaussian::isotropic(vec![0.0], 1.0).unwrap(), n, &RngStream::new(1)).unwrap();
    let xs: Vec<f64> = s.iter().copied().collect();
    let spec = HistogramSpec { bins: 256, lo: -4.0, hi: 4.0, base: 2.0 };
    let h = shannon_entropy(&xs, &spec).unwrap();
    // differential entropy minus log2 of the bin width
    let want = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).log2() + 5.0;
    assert!((h - want).abs() < 0.05, "{h} vs {want}");

    let nats = shannon_entropy(&xs, &HistogramSpec { base: std::f64::consts::E, ..spec.clone() }).unwrap();
    assert!((nats - h * std::f64::consts::LN_2).abs() < 1e-12);
}

#[test]
fn merging_bins_never_adds_entropy() {
    let mut g = RngStream::new(2).rng();
    let xs: Vec<f64> = (0..5000).map(|_| 0.7 * standard_normal(&mut g) - 0.3).collect();
    let mut last = f64::INFINITY;
    for bins in [512, 256, 128, 64, 32, 16, 8, 4, 2] {
        let h = shannon_entropy(&xs, &HistogramSpec { bins, lo: -2.0, hi: 2.0, base: 2.0 }).unwrap();
        assert!(h <= last + 1e-12, "{bins}: {h} > {last}");
        assert!(h <= (bins as f64).log2() + 1e-12);
        last = h;
    }
    assert!(last <= 1.0);
}

#[test]
fn experiments_are_deterministic() {
    let cfg = small_config();
    assert_eq!(run_moments_grid(&cfg.moments, 3).unwrap(), run_moments_grid(&cfg.moments, 3).unwrap());
    assert_eq!(run_washout_experiment(&cfg, 3).unwrap(), run_washout_experiment(&cfg, 3).unwrap());
    assert_eq!(run_entropy_experiment(&cfg, 3).unwrap(), run_entropy_experiment(&cfg, 3).unwrap());
    let net = &cfg.ffnn.networks[0];
    assert_eq!(
        ffnn_propagate(&cfg.ffnn, net, 3).unwrap().to_table(),
        ffnn_propagate(&cfg.ffnn, net, 3).unwrap().to_table()
    );
    let a = run_model_learning(&cfg, 3).unwrap();
    let b = run_model_learning(&cfg, 3).unwrap();
    assert_eq!(a.single, b.single);
    assert_eq!(a.multi, b.multi);
    assert_ne!(run_washout_experiment(&cfg, 4).unwrap(), run_washout_experiment(&cfg, 3).unwrap());
}

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pesn-bench"))
}

#[test]
fn cli_writes_outputs_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("small.toml");
    std::fs::write(&cfg_path, small_config().to_toml().unwrap()).unwrap();
    let out = dir.path().join("out");

    let status = bench()
        .args(["--config", cfg_path.to_str().unwrap(), "--seed", "5", "--out", out.to_str().unwrap()])
        .arg("entropy")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("entropy_seed5.csv").exists());
    let meta = std::fs::read_to_string(out.join("entropy_seed5.meta.json")).unwrap();
    assert!(meta.contains("config_sha256"));

    let missing = bench().args(["--config", "/nonexistent/cfg.toml", "washout"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[washout]\nlengths = [10, 1]\n").unwrap();
    let bad_run = bench().args(["--config", bad.to_str().unwrap(), "washout"]).output().unwrap();
    assert_eq!(bad_run.status.code(), Some(2));

    let unknown = bench().args(["--config", cfg_path.to_str().unwrap(), "no-such-command"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));
}

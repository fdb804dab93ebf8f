mod support;

use nalgebra::{DMatrix, DVector};
use pesn::cartpole::{input_map, make_dataset, DataSpec};
use pesn::gaussian::standard_normal;
use pesn::linalg::{is_positive_definite, least_squares, spectral_radius};
use pesn::reservoir::{
    esn_predict, esn_step_deterministic, init_reservoir, mc_ensemble_rollout, regressor, rls_update, train_batch,
    Dataset, EsnParams, InputMap, PredictionMode, Rls, RolloutSpec, Split,
};
use pesn::RngStream;
use rand::Rng;
use support::{reference_step, svd_least_squares};

fn small_params() -> EsnParams {
    EsnParams { reservoir_size: 20, sparsity: 0.3, ..EsnParams::default() }
}

fn random_dataset(rows: usize, nz: usize, ny: usize, seed: u64, split: Split) -> Dataset {
    let mut g = RngStream::new(seed).rng();
    let inputs = (0..rows).map(|_| (0..nz).map(|_| g.random_range(-1.0..1.0)).collect()).collect();
    let targets = (0..rows).map(|_| (0..ny).map(|_| g.random_range(-1.0..1.0)).collect()).collect();
    Dataset::new(inputs, targets, split).unwrap()
}

#[test]
fn init_is_deterministic_and_scaled() {
    let p = small_params();
    let a = init_reservoir(&p, (3, 2), &RngStream::new(11)).unwrap();
    assert_eq!(a, init_reservoir(&p, (3, 2), &RngStream::new(11)).unwrap());
    assert_ne!(a.w, init_reservoir(&p, (3, 2), &RngStream::new(12)).unwrap().w);
    assert_eq!(a.w.nnz(), 120);
    // rescaling an already scaled matrix is a no-op
    let r = spectral_radius(&a.w, &RngStream::new(99)).unwrap();
    assert!((r - p.spectral_radius).abs() < 1e-6 * p.spectral_radius);
}

#[test]
fn step_matches_reference_implementation() {
    let p = small_params();
    let w = init_reservoir(&p, (3, 2), &RngStream::new(2)).unwrap();
    let dense = w.w.to_dense();
    let mut g = RngStream::new(3).rng();
    let mut h: Vec<f64> = (0..20).map(|_| g.random_range(-1.0..1.0)).collect();
    for _ in 0..20 {
        let z: Vec<f64> = (0..3).map(|_| standard_normal(&mut g)).collect();
        let y: Vec<f64> = (0..2).map(|_| standard_normal(&mut g)).collect();
        let got = esn_step_deterministic(&h, &z, &y, &w, &p).unwrap();
        let want = reference_step(&h, &z, &y, &w.w_in, &w.w_fb, &dense, p.leak);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
        h = got;
    }
}

#[test]
fn leak_one_with_zero_weights_gives_zero() {
    let p = EsnParams { leak: 1.0, input_scale: 0.0, feedback_scale: 0.0, ..small_params() };
    let mut w = init_reservoir(&p, (2, 1), &RngStream::new(1)).unwrap();
    w.w = w.w.scaled(0.0);
    let h = esn_step_deterministic(&[0.5; 20], &[1.0, 2.0], &[3.0], &w, &p).unwrap();
    assert!(h.iter().all(|&v| v == 0.0));
}

#[test]
fn batch_recovers_exact_linear_readout() {
    let p = EsnParams { feedback_scale: 0.0, ..small_params() };
    let w = init_reservoir(&p, (3, 1), &RngStream::new(4)).unwrap();
    let split = Split { washout: 20, train: 200, test: 0 };
    let base = random_dataset(220, 3, 1, 5, split);
    let a = DMatrix::from_fn(1, 24, |_, j| ((j as f64) * 0.37).sin());
    // feedback is off, so states do not depend on the targets
    let mut h = vec![0.0; 20];
    let mut targets = Vec::new();
    for k in 0..220 {
        h = esn_step_deterministic(&h, base.input(k), &[0.0], &w, &p).unwrap();
        let b = DVector::from_vec(regressor(base.input(k), &h));
        targets.push(vec![(&a * b)[0]]);
    }
    let data = Dataset::new(base.inputs().to_vec(), targets, split).unwrap();
    let r = train_batch(&w, &p, &data, &vec![0.0; 20], None).unwrap();
    assert!((&r.w_out - &a).abs().max() < 1e-8);

    // normal-equation orthogonality on a noisy target
    let r = train_batch(&w, &p, &base, &vec![0.0; 20], None).unwrap();
    let ortho = r.residuals.transpose() * &r.regressors;
    assert!(ortho.abs().max() < 1e-8, "{}", ortho.abs().max());
    let oracle = svd_least_squares(&r.regressors, &DMatrix::from_fn(200, 1, |i, _| base.target(20 + i)[0]));
    assert!((&r.w_out.transpose() - oracle).abs().max() < 1e-8);
}

#[test]
fn cartpole_fit_beats_mean_baseline() {
    let spec = DataSpec::default();
    let data = make_dataset(&spec, 1).unwrap().dataset;
    let p = EsnParams::default();
    let w = init_reservoir(&p, (5, 2), &RngStream::new(1)).unwrap();
    let r = train_batch(&w, &p, &data, &vec![0.0; 100], None).unwrap();
    for j in 0..2 {
        let col: Vec<f64> = (0..spec.train).map(|i| data.target(spec.washout + i)[j]).collect();
        let m = col.iter().sum::<f64>() / col.len() as f64;
        let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / col.len() as f64;
        let mse = r.residuals.column(j).iter().map(|v| v * v).sum::<f64>() / col.len() as f64;
        assert!(mse < var, "dim {j}: {mse} vs {var}");
    }
}

#[test]
fn rls_equals_ridge_regularized_batch() {
    // With P0 = delta I and lambda = 1, RLS solves the ridge problem with penalty 1/delta.
    let spec = DataSpec { train: 500, ..DataSpec::default() };
    let data = make_dataset(&spec, 2).unwrap().dataset;
    let p = EsnParams::default();
    let w = init_reservoir(&p, (5, 2), &RngStream::new(2)).unwrap();
    let r = train_batch(&w, &p, &data, &vec![0.0; 100], None).unwrap();
    let delta = 1e6;
    let mut rls = Rls::new(w.regressor_dim(), delta, 1.0).unwrap();
    let mut w_rls = DMatrix::zeros(2, w.regressor_dim());
    for (k, row) in r.regressors.row_iter().enumerate() {
        let b: Vec<f64> = row.iter().copied().collect();
        rls.update(&mut w_rls, &b, data.target(spec.washout + k)).unwrap();
    }
    let y = DMatrix::from_fn(500, 2, |i, j| data.target(spec.washout + i)[j]);
    let ridge = least_squares(&r.regressors, &y, 1.0 / delta).unwrap().transpose();
    let rel = (&w_rls - &ridge).norm() / ridge.norm();
    assert!(rel < 1e-6, "{rel}");
}

#[test]
fn rls_matches_batch_on_well_conditioned_problem() {
    let mut g = RngStream::new(8).rng();
    let a = DMatrix::from_fn(300, 6, |_, _| standard_normal(&mut g));
    let truth = DMatrix::from_fn(6, 2, |i, j| (i + 2 * j) as f64 * 0.1 - 0.3);
    let noise = DMatrix::from_fn(300, 2, |_, _| 0.05 * standard_normal(&mut g));
    let y = &a * &truth + noise;
    let mut w = DMatrix::zeros(2, 6);
    let mut p = DMatrix::identity(6, 6) * 1e6;
    for i in 0..300 {
        let b: Vec<f64> = a.row(i).iter().copied().collect();
        let t: Vec<f64> = y.row(i).iter().copied().collect();
        (w, p) = rls_update(&w, &p, &b, &t, 1.0).unwrap();
    }
    let batch = svd_least_squares(&a, &y).transpose();
    assert!((&w - &batch).norm() / batch.norm() < 1e-4);
}

#[test]
fn rls_covariance_stays_symmetric_positive_definite() {
    let mut g = RngStream::new(4).rng();
    let mut rls = Rls::new(8, 1.0, 0.99).unwrap();
    let mut w = DMatrix::zeros(1, 8);
    for _ in 0..1000 {
        let b: Vec<f64> = (0..8).map(|_| standard_normal(&mut g)).collect();
        rls.update(&mut w, &b, &[standard_normal(&mut g)]).unwrap();
        assert!((&rls.p - rls.p.transpose()).abs().max() <= 1e-10);
        assert!(is_positive_definite(&rls.p));
    }
}

fn trained_small() -> (pesn::reservoir::EsnWeights, EsnParams, Dataset, Readout0) {
    let p = small_params();
    let split = Split { washout: 30, train: 150, test: 60 };
    let data = random_dataset(240, 2, 1, 6, split);
    let w = init_reservoir(&p, (2, 1), &RngStream::new(6)).unwrap();
    let r = train_batch(&w, &p, &data, &vec![0.0; 20], None).unwrap();
    let res = r.residuals.clone();
    (w.with_readout(r.w_out).unwrap(), p, data, Readout0(res))
}

struct Readout0(DMatrix<f64>);

#[test]
fn single_mode_on_training_rows_reproduces_residuals() {
    let (w, p, data, Readout0(res)) = trained_small();
    let spec = RolloutSpec::new(0, 30, 150, PredictionMode::Single);
    let pred = esn_predict(&w, &p, &data, &vec![0.0; 20], &spec, &InputMap::open_loop(2, 1), None).unwrap();
    for (k, e) in pred.abs_errors().iter().enumerate() {
        assert!((e[0] - res[(k, 0)].abs()).abs() < 1e-10);
    }
}

#[test]
fn multi_horizon_one_is_a_single_step() {
    let (w, p, data, _) = trained_small();
    let map = InputMap::open_loop(2, 1);
    let h0 = vec![0.1; 20];
    let multi = esn_predict(&w, &p, &data, &h0, &RolloutSpec::new(170, 10, 1, PredictionMode::Multi), &map, None).unwrap();
    let single = esn_predict(&w, &p, &data, &h0, &RolloutSpec::new(170, 10, 1, PredictionMode::Single), &map, None).unwrap();
    assert_eq!(multi.outputs, single.outputs);
}

#[test]
fn one_trial_ensemble_is_a_plain_rollout() {
    let spec_data = DataSpec { train: 400, test: 100, ..DataSpec::default() };
    let data = make_dataset(&spec_data, 3).unwrap().dataset;
    let p = EsnParams { reservoir_size: 30, ..EsnParams::default() };
    let w = init_reservoir(&p, (5, 2), &RngStream::new(3)).unwrap();
    let r = train_batch(&w, &p, &data, &vec![0.0; 30], None).unwrap();
    let w = w.with_readout(r.w_out).unwrap();
    let map = input_map(&spec_data.physics);
    let spec = RolloutSpec::new(500, 20, 10, PredictionMode::Multi);
    let rng = RngStream::new(50);
    let ens = mc_ensemble_rollout(&w, &p, &data, &spec, &map, 1, &rng).unwrap();
    let mut g = rng.substream(0).rng();
    let h0: Vec<f64> = (0..30).map(|_| standard_normal(&mut g)).collect();
    let direct = esn_predict(&w, &p, &data, &h0, &spec, &map, None).unwrap();
    assert_eq!(ens.trials[0].outputs, direct.outputs);
    assert_eq!(ens.trials[0].washout_states, direct.washout_states);

    let a = mc_ensemble_rollout(&w, &p, &data, &spec, &map, 8, &rng).unwrap();
    let b = mc_ensemble_rollout(&w, &p, &data, &spec, &map, 8, &rng).unwrap();
    assert_eq!(a.error_stats(), b.error_stats());
}

#[test]
fn bounded_states_and_echo_contraction() {
    let p = EsnParams { reservoir_size: 50, ..EsnParams::default() };
    let w = init_reservoir(&p, (2, 1), &RngStream::new(7)).unwrap();
    let mut g = RngStream::new(8).rng();
    let mut a: Vec<f64> = (0..50).map(|_| g.random_range(-1.0..1.0)).collect();
    let mut b: Vec<f64> = (0..50).map(|_| g.random_range(-1.0..1.0)).collect();
    let mut window_max = Vec::new();
    let mut cur = 0.0f64;
    for k in 0..200 {
        let z = [(0.1 * k as f64).sin(), g.random_range(-1.0..1.0)];
        let y = [(0.05 * k as f64).cos()];
        a = esn_step_deterministic(&a, &z, &y, &w, &p).unwrap();
        b = esn_step_deterministic(&b, &z, &y, &w, &p).unwrap();
        assert!(a.iter().chain(&b).all(|v| v.abs() <= 1.0));
        cur = cur.max(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        if k % 50 == 49 {
            window_max.push(cur);
            cur = 0.0;
        }
    }
    assert!(window_max.windows(2).all(|w| w[1] <= w[0]), "{window_max:?}");
}

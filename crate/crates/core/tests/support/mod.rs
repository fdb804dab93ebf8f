//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use nalgebra::DMatrix;

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
// Gauss weights for the 7-point rule sit on the odd Kronrod nodes.
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = K15_WEIGHTS[7] * fc;
    let mut g = G7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let s = f(c - h * GK_NODES[i]) + f(c + h * GK_NODES[i]);
        k += K15_WEIGHTS[i] * s;
        if i % 2 == 1 {
            g += G7_WEIGHTS[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (v, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return v;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss-Kronrod (7/15) quadrature of `f` over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    adapt(&f, a, b, tol, 40)
}

pub fn normal_pdf(z: f64, mu: f64, var: f64) -> f64 {
    (-(z - mu).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// `E[g(X)]` for `X ~ N(mu, var)` by quadrature over `mu +- 12 sd`.
pub fn gaussian_expectation(g: impl Fn(f64) -> f64, mu: f64, var: f64) -> f64 {
    let sd = var.sqrt();
    let pts: Vec<f64> = (0..=24).map(|i| mu + sd * (i as f64 - 12.0)).collect();
    pts.windows(2)
        .map(|w| integrate(|z| g(z) * normal_pdf(z, mu, var), w[0], w[1], 1e-15))
        .sum()
}

/// Reservoir update written out with explicit loops over dense matrices.
pub fn reference_step(
    h: &[f64],
    z: &[f64],
    y: &[f64],
    w_in: &DMatrix<f64>,
    w_fb: &DMatrix<f64>,
    w: &DMatrix<f64>,
    leak: f64,
) -> Vec<f64> {
    let n = h.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut a = 0.0;
        for j in 0..z.len() {
            a += w_in[(i, j)] * z[j];
        }
        for j in 0..y.len() {
            a += w_fb[(i, j)] * y[j];
        }
        for j in 0..n {
            a += w[(i, j)] * h[j];
        }
        out[i] = (1.0 - leak) * h[i] + leak * a.tanh();
    }
    out
}

/// Least squares through the SVD pseudo-inverse; `x` solves `a x ~ b`.
pub fn svd_least_squares(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    svd.solve(b, 1e-13).expect("svd solve")
}

/// Diagonal of `W diag(v) W^T` from the full product.
pub fn dense_propagated_variance(w: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let full = w * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v)) * w.transpose();
    full.diagonal().iter().copied().collect()
}

/// A configuration small enough to run every experiment in seconds.
pub fn small_config() -> pesn::harness::ExperimentConfig {
    use pesn::harness::config::NetworkSpec;
    let mut cfg = pesn::harness::ExperimentConfig::default();
    cfg.moments.mu_min = -4.0;
    cfg.moments.mu_max = 4.0;
    cfg.moments.mu_step = 2.0;
    cfg.moments.variances = vec![0.5];
    cfg.moments.mc_samples = 20_000;
    cfg.timing.sizes = vec![50, 100];
    cfg.timing.repeats = 3;
    cfg.timing.mc_samples = 100;
    cfg.data.washout = 50;
    cfg.data.train = 300;
    cfg.data.test = 120;
    cfg.pesn.esn.reservoir_size = 30;
    cfg.pesn.esn.washout = 50;
    cfg.washout.lengths = vec![1, 10, 30];
    cfg.washout.trials = 5;
    cfg.washout.horizon = 5;
    cfg.ffnn.input_dim = 16;
    cfg.ffnn.networks = vec![NetworkSpec { name: "tiny".into(), hidden: vec![4, 4] }];
    cfg.ffnn.mc_samples = 2_000;
    cfg.ffnn.cdf_points = 21;
    cfg.model_learning.trials = 5;
    cfg.model_learning.multi_horizon = 5;
    cfg.model_learning.single_steps = 10;
    cfg
}

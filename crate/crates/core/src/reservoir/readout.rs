//! Readout training: batch least squares and recursive least squares.

use nalgebra::{DMatrix, DVector};

use super::{esn_step, Dataset, EsnParams, EsnWeights};
use crate::error::{Error, Result};
use crate::gaussian::RngStream;
use crate::linalg::least_squares;

/// Readout regressor `[1; z; h]`.
#[must_use]
pub fn regressor(z: &[f64], h: &[f64]) -> Vec<f64> {
    let mut b = Vec::with_capacity(1 + z.len() + h.len());
    b.push(1.0);
    b.extend_from_slice(z);
    b.extend_from_slice(h);
    b
}

/// Result of batch training.
#[derive(Clone, Debug)]
pub struct Readout {
    pub w_out: DMatrix<f64>,
    /// One row per training step: regressor `[1; z; h]`.
    pub regressors: DMatrix<f64>,
    /// One row per training step: `y - W_out b`.
    pub residuals: DMatrix<f64>,
    /// Reservoir state after the last training row.
    pub final_state: Vec<f64>,
}

/// Teacher-forced run over the washout and training rows of `data`, followed
/// by a least-squares fit of `W_out`.
///
/// `h0` is the initial reservoir state. `noise` supplies the `M_e dw` term
/// and may be `None` when `params.noise` is zero.
pub fn train_batch(
    weights: &EsnWeights,
    params: &EsnParams,
    data: &Dataset,
    h0: &[f64],
    noise: Option<&RngStream>,
) -> Result<Readout> {
    params.validate()?;
    let split = data.split();
    if split.train == 0 {
        return Err(Error::Config("training split is empty".into()));
    }
    if data.input_dim() != weights.input_dim() || data.output_dim() != weights.output_dim() {
        return Err(Error::Shape("dataset columns do not match the network".into()));
    }
    if params.noise > 0.0 && noise.is_none() {
        return Err(Error::Config("state noise is enabled but no random stream was given".into()));
    }
    let mut g = noise.map(RngStream::rng);
    let d = weights.regressor_dim();
    let mut regressors = DMatrix::zeros(split.train, d);
    let mut targets = DMatrix::zeros(split.train, weights.output_dim());
    let mut h = h0.to_vec();
    for k in 0..split.washout + split.train {
        let y_prev = data.previous_target(k);
        h = esn_step(&h, data.input(k), &y_prev, weights, params, g.as_mut())?;
        if k >= split.washout {
            let row = k - split.washout;
            let b = regressor(data.input(k), &h);
            regressors.row_mut(row).copy_from_slice(&b);
            targets.row_mut(row).copy_from_slice(data.target(k));
        }
    }
    let w_out = least_squares(&regressors, &targets, params.ridge)?.transpose();
    let residuals = &targets - &regressors * w_out.transpose();
    Ok(Readout {
        w_out,
        regressors,
        residuals,
        final_state: h,
    })
}

/// Recursive least-squares state: inverse Gram estimate `P` and forgetting factor.
#[derive(Clone, Debug, PartialEq)]
pub struct Rls {
    pub p: DMatrix<f64>,
    pub lambda: f64,
}

impl Rls {
    /// `P = delta I`.
    pub fn new(dim: usize, delta: f64, lambda: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) || !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Config(format!(
                "RLS needs delta > 0 and lambda in (0, 1], got {delta}, {lambda}"
            )));
        }
        Ok(Self {
            p: DMatrix::identity(dim, dim) * delta,
            lambda,
        })
    }

    /// Folds one `(b, y)` pair into `w_out` in place.
    pub fn update(&mut self, w_out: &mut DMatrix<f64>, b: &[f64], y: &[f64]) -> Result<()> {
        let d = self.p.nrows();
        if b.len() != d || w_out.ncols() != d || y.len() != w_out.nrows() {
            return Err(Error::Shape("RLS regressor/target sizes do not match".into()));
        }
        let b = DVector::from_column_slice(b);
        let pb = &self.p * &b;
        let denom = self.lambda + b.dot(&pb);
        if !(denom.is_finite() && denom > 0.0) {
            return Err(Error::Numeric(format!("RLS gain denominator is {denom}")));
        }
        let gain = &pb / denom;
        let innovation = DVector::from_column_slice(y) - &*w_out * &b;
        w_out.ger(1.0, &innovation, &gain, 1.0);
        self.p.ger(-1.0, &gain, &pb, 1.0);
        self.p /= self.lambda;
        let sym = (&self.p + self.p.transpose()) * 0.5;
        self.p = sym;
        if w_out.iter().chain(self.p.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("RLS update produced non-finite values".into()));
        }
        Ok(())
    }
}

/// One RLS step returning new copies of `W_out` and `P`.
pub fn rls_update(
    w_out: &DMatrix<f64>,
    p: &DMatrix<f64>,
    b: &[f64],
    y: &[f64],
    lambda: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mut state = Rls { p: p.clone(), lambda };
    let mut w = w_out.clone();
    state.update(&mut w, b, y)?;
    Ok((w, state.p))
}

/// Standard-normal initial reservoir state.
pub(crate) fn random_state(n: usize, rng: &RngStream) -> Vec<f64> {
    let mut g = rng.rng();
    (0..n).map(|_| crate::gaussian::standard_normal(&mut g)).collect()
}

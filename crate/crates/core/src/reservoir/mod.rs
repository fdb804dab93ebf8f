//! Leaky echo state network: `h' = (1-L) h + L tanh(W_in z + W_fb y_prev + W h) + M_e dw`.
//!
//! Only the linear readout `y = W_out [1; z; h]` is trained.

mod data;
mod predict;
mod readout;

use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{standard_normal, RngStream};
use crate::linalg::{dense_mul_add, spectral_radius, SparseMatrix};

pub use data::{Dataset, Split};
pub use predict::{
    esn_predict, mc_ensemble_rollout, Ensemble, ErrorStats, InputMap, Prediction, PredictionMode,
    RolloutSpec,
};
pub(crate) use predict::check_rollout;
pub use readout::{regressor, rls_update, train_batch, Readout, Rls};

const INIT_ATTEMPTS: u64 = 8;

/// Reservoir hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsnParams {
    pub reservoir_size: usize,
    pub leak: f64,
    /// Scale of the additive state noise `M_e dw`.
    pub noise: f64,
    /// Fraction of nonzero recurrent weights.
    pub sparsity: f64,
    pub spectral_radius: f64,
    /// Default number of burn-in steps before predicting.
    pub washout: usize,
    pub rls_lambda: f64,
    pub rls_delta: f64,
    /// Multiplier on the standard normal input weights.
    pub input_scale: f64,
    /// Multiplier on the standard normal feedback weights.
    pub feedback_scale: f64,
    /// Tikhonov term for the batch readout; 0 disables it.
    pub ridge: f64,
}

impl Default for EsnParams {
    fn default() -> Self {
        Self {
            reservoir_size: 100,
            leak: 0.1,
            noise: 0.0,
            sparsity: 0.1,
            spectral_radius: 0.9,
            washout: 100,
            rls_lambda: 1.0,
            rls_delta: 1.0,
            input_scale: 0.2,
            feedback_scale: 0.2,
            ridge: 0.0,
        }
    }
}

impl EsnParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.reservoir_size == 0 {
            return bad("reservoir_size must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.leak) {
            return bad(format!("leak must be in [0, 1], got {}", self.leak));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise must be >= 0, got {}", self.noise));
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return bad(format!("sparsity must be in (0, 1], got {}", self.sparsity));
        }
        if !(self.spectral_radius > 0.0 && self.spectral_radius.is_finite()) {
            return bad(format!("spectral_radius must be > 0, got {}", self.spectral_radius));
        }
        if !(self.rls_lambda > 0.0 && self.rls_lambda <= 1.0) {
            return bad(format!("rls_lambda must be in (0, 1], got {}", self.rls_lambda));
        }
        if !(self.rls_delta > 0.0 && self.rls_delta.is_finite()) {
            return bad(format!("rls_delta must be > 0, got {}", self.rls_delta));
        }
        if !(self.input_scale.is_finite() && self.feedback_scale.is_finite()) {
            return bad("weight scales must be finite".into());
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return bad(format!("ridge must be >= 0, got {}", self.ridge));
        }
        Ok(())
    }
}

/// Fixed random weights plus the trained readout.
#[derive(Clone, Debug, PartialEq)]
pub struct EsnWeights {
    pub w_in: DMatrix<f64>,
    pub w_fb: DMatrix<f64>,
    pub w: SparseMatrix,
    /// `n_outputs x (1 + n_inputs + reservoir_size)`.
    pub w_out: DMatrix<f64>,
    /// Stream the random matrices were drawn from, if known.
    pub origin: Option<RngStream>,
}

impl EsnWeights {
    /// Assembles weights, checking that the blocks agree.
    pub fn new(
        w_in: DMatrix<f64>,
        w_fb: DMatrix<f64>,
        w: SparseMatrix,
        w_out: DMatrix<f64>,
    ) -> Result<Self> {
        let n = w.nrows();
        if w.ncols() != n || w_in.nrows() != n || w_fb.nrows() != n {
            return Err(Error::Shape("reservoir blocks disagree on N_h".into()));
        }
        if w_out.nrows() != w_fb.ncols() || w_out.ncols() != 1 + w_in.ncols() + n {
            return Err(Error::Shape(format!(
                "readout is {}x{}, expected {}x{}",
                w_out.nrows(),
                w_out.ncols(),
                w_fb.ncols(),
                1 + w_in.ncols() + n
            )));
        }
        Ok(Self {
            w_in,
            w_fb,
            w,
            w_out,
            origin: None,
        })
    }

    #[must_use]
    pub fn reservoir_size(&self) -> usize {
        self.w.nrows()
    }

    #[must_use]
    pub fn input_dim(&self) -> usize {
        self.w_in.ncols()
    }

    #[must_use]
    pub fn output_dim(&self) -> usize {
        self.w_fb.ncols()
    }

    /// Length of the readout regressor `[1; z; h]`.
    #[must_use]
    pub fn regressor_dim(&self) -> usize {
        1 + self.input_dim() + self.reservoir_size()
    }

    pub fn with_readout(mut self, w_out: DMatrix<f64>) -> Result<Self> {
        if w_out.shape() != self.w_out.shape() {
            return Err(Error::Shape(format!(
                "readout is {:?}, expected {:?}",
                w_out.shape(),
                self.w_out.shape()
            )));
        }
        self.w_out = w_out;
        Ok(self)
    }

    /// Pre-activation `W_in z + W_fb y_prev + W h`.
    pub fn pre_activation(&self, h: &[f64], z: &[f64], y_prev: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(h, z, y_prev)?;
        let mut a = self.w.mul_vec(h);
        dense_mul_add(&self.w_in, z, &mut a);
        dense_mul_add(&self.w_fb, y_prev, &mut a);
        Ok(a)
    }

    fn check_dims(&self, h: &[f64], z: &[f64], y_prev: &[f64]) -> Result<()> {
        if h.len() != self.reservoir_size() || z.len() != self.input_dim() || y_prev.len() != self.output_dim() {
            return Err(Error::Shape(format!(
                "state/input/feedback lengths {}/{}/{} do not match {}/{}/{}",
                h.len(),
                z.len(),
                y_prev.len(),
                self.reservoir_size(),
                self.input_dim(),
                self.output_dim()
            )));
        }
        Ok(())
    }

    /// `W_out [1; z; h]`.
    pub fn readout(&self, z: &[f64], h: &[f64]) -> Result<Vec<f64>> {
        let b = regressor(z, h);
        if b.len() != self.w_out.ncols() {
            return Err(Error::Shape("regressor length does not match the readout".into()));
        }
        let mut y = vec![0.0; self.output_dim()];
        dense_mul_add(&self.w_out, &b, &mut y);
        Ok(y)
    }

    /// Versioned JSON document.
    pub fn to_json(&self, params: &EsnParams) -> Result<String> {
        let doc = WeightsDoc {
            format: WEIGHTS_FORMAT.into(),
            reservoir_size: self.reservoir_size(),
            n_inputs: self.input_dim(),
            n_outputs: self.output_dim(),
            params: params.clone(),
            origin: self.origin,
            w_in: rows(&self.w_in),
            w_fb: rows(&self.w_fb),
            w: self.w.clone(),
            w_out: rows(&self.w_out),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Numeric(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<(Self, EsnParams)> {
        let doc: WeightsDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "weights json".into(),
            detail: e.to_string(),
        })?;
        if doc.format != WEIGHTS_FORMAT {
            return Err(Error::Parse {
                what: "weights json".into(),
                detail: format!("unsupported format '{}'", doc.format),
            });
        }
        let (n, nz, ny) = (doc.reservoir_size, doc.n_inputs, doc.n_outputs);
        let mut w = Self::new(
            matrix(&doc.w_in, n, nz)?,
            matrix(&doc.w_fb, n, ny)?,
            doc.w,
            matrix(&doc.w_out, ny, 1 + nz + n)?,
        )?;
        w.origin = doc.origin;
        doc.params.validate()?;
        Ok((w, doc.params))
    }

    pub fn save(&self, params: &EsnParams, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json(params)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<(Self, EsnParams)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

const WEIGHTS_FORMAT: &str = "esn-weights v1";

#[derive(Serialize, Deserialize)]
struct WeightsDoc {
    format: String,
    reservoir_size: usize,
    n_inputs: usize,
    n_outputs: usize,
    params: EsnParams,
    origin: Option<RngStream>,
    w_in: Vec<Vec<f64>>,
    w_fb: Vec<Vec<f64>>,
    w: SparseMatrix,
    w_out: Vec<Vec<f64>>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>], nr: usize, nc: usize) -> Result<DMatrix<f64>> {
    if rows.len() != nr || rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Shape(format!("expected a {nr}x{nc} matrix")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(nr, nc, &flat))
}

/// Draws the fixed reservoir matrices for `dims = (n_inputs, n_outputs)`.
///
/// Entries are standard normal; exactly `round(sparsity N_h^2)` recurrent
/// entries are kept, and `W` is rescaled to the requested spectral radius.
/// A draw whose recurrent matrix has zero spectral radius is retried with a
/// fresh mask, up to 8 times.
pub fn init_reservoir(params: &EsnParams, dims: (usize, usize), rng: &RngStream) -> Result<EsnWeights> {
    params.validate()?;
    let (nz, ny) = dims;
    if nz == 0 || ny == 0 {
        return Err(Error::Shape("need at least one input and one output".into()));
    }
    let n = params.reservoir_size;
    let mut g = rng.substream(0).rng();
    let w_in = gaussian_matrix(&mut g, n, nz) * params.input_scale;
    let w_fb = gaussian_matrix(&mut g, n, ny) * params.feedback_scale;

    let total = n * n;
    let keep = ((params.sparsity * total as f64).round() as usize).clamp(1, total);
    for attempt in 0..INIT_ATTEMPTS {
        let mut gm = rng.substream(1 + attempt).rng();
        let mut picked = index::sample(&mut gm, total, keep).into_vec();
        picked.sort_unstable();
        let entries = picked
            .into_iter()
            .map(|k| (k / n, k % n, standard_normal(&mut gm)))
            .collect();
        let w = SparseMatrix::from_triplets(n, n, entries)?;
        if w.is_zero() {
            continue;
        }
        let rho = spectral_radius(&w, &rng.substream(100 + attempt))?;
        if !(rho > 1e-12) {
            continue;
        }
        let w = w.scaled(params.spectral_radius / rho);
        let mut out = EsnWeights::new(w_in, w_fb, w, DMatrix::zeros(ny, 1 + nz + n))?;
        out.origin = Some(*rng);
        return Ok(out);
    }
    Err(Error::Numeric(format!(
        "recurrent matrix had zero spectral radius after {INIT_ATTEMPTS} attempts; raise sparsity"
    )))
}

fn gaussian_matrix<R: Rng>(g: &mut R, r: usize, c: usize) -> DMatrix<f64> {
    // Row-major draw order.
    let data: Vec<f64> = (0..r * c).map(|_| standard_normal(g)).collect();
    DMatrix::from_row_slice(r, c, &data)
}

/// One reservoir update. Pass `noise = None` to omit the `M_e dw` term.
pub fn esn_step<R: Rng + ?Sized>(
    h: &[f64],
    z: &[f64],
    y_prev: &[f64],
    weights: &EsnWeights,
    params: &EsnParams,
    noise: Option<&mut R>,
) -> Result<Vec<f64>> {
    let a = weights.pre_activation(h, z, y_prev)?;
    let l = params.leak;
    let mut out: Vec<f64> = h
        .iter()
        .zip(&a)
        .map(|(hi, ai)| (1.0 - l) * hi + l * ai.tanh())
        .collect();
    if let Some(g) = noise {
        if params.noise > 0.0 {
            for o in &mut out {
                *o += params.noise * standard_normal(g);
            }
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("reservoir state became non-finite".into()));
    }
    Ok(out)
}

/// Reservoir step without noise.
pub fn esn_step_deterministic(
    h: &[f64],
    z: &[f64],
    y_prev: &[f64],
    weights: &EsnWeights,
    params: &EsnParams,
) -> Result<Vec<f64>> {
    esn_step::<rand_chacha::ChaCha8Rng>(h, z, y_prev, weights, params, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonzero_count_and_radius() {
        let p = EsnParams::default();
        let w = init_reservoir(&p, (3, 2), &RngStream::new(4)).unwrap();
        assert_eq!(w.w.nnz(), 1000);
        let rho = crate::linalg::dense_spectral_radius(&w.w.to_dense());
        assert!((rho - 0.9).abs() < 1e-6 * 0.9, "{rho}");
        assert_eq!(w.w_out.shape(), (2, 104));
    }

    #[test]
    fn leak_off_and_zero_weights() {
        let mut p = EsnParams {
            reservoir_size: 5,
            sparsity: 0.5,
            leak: 0.0,
            ..EsnParams::default()
        };
        let w = init_reservoir(&p, (1, 1), &RngStream::new(1)).unwrap();
        let h = vec![0.3, -0.2, 0.1, 0.0, 0.9];
        assert_eq!(esn_step_deterministic(&h, &[1.0], &[2.0], &w, &p).unwrap(), h);
        p.leak = 1.0;
        let zero = EsnWeights::new(
            DMatrix::zeros(5, 1),
            DMatrix::zeros(5, 1),
            SparseMatrix::zeros(5, 5),
            DMatrix::zeros(1, 7),
        )
        .unwrap();
        assert_eq!(esn_step_deterministic(&h, &[1.0], &[2.0], &zero, &p).unwrap(), vec![0.0; 5]);
        assert!(esn_step_deterministic(&h, &[1.0, 2.0], &[2.0], &zero, &p).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = EsnParams { reservoir_size: 8, sparsity: 0.3, ..EsnParams::default() };
        let w = init_reservoir(&p, (2, 1), &RngStream::new(11)).unwrap();
        let (back, bp) = EsnWeights::from_json(&w.to_json(&p).unwrap()).unwrap();
        assert_eq!(back, w);
        assert_eq!(bp, p);
    }

    #[test]
    fn rejects_bad_params() {
        let p = EsnParams { leak: 1.5, ..EsnParams::default() };
        assert!(init_reservoir(&p, (1, 1), &RngStream::new(0)).is_err());
    }
}

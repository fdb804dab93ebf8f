//! Sparse matrices, spectral radius estimation and least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{standard_normal, RngStream};

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Triplets", into = "Triplets")]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Triplets {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TryFrom<Triplets> for SparseMatrix {
    type Error = Error;

    fn try_from(t: Triplets) -> Result<Self> {
        SparseMatrix::from_triplets(t.rows, t.cols, t.entries)
    }
}

impl From<SparseMatrix> for Triplets {
    fn from(m: SparseMatrix) -> Self {
        Triplets {
            rows: m.n_rows,
            cols: m.n_cols,
            entries: m.iter().collect(),
        }
    }
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` entries; duplicates are summed and
    /// explicit zeros kept.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut entries: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        if let Some(&(i, j, _)) = entries.iter().find(|(i, j, _)| *i >= n_rows || *j >= n_cols) {
            return Err(Error::Shape(format!(
                "entry ({i}, {j}) outside a {n_rows}x{n_cols} matrix"
            )));
        }
        if entries.iter().any(|e| !e.2.is_finite()) {
            return Err(Error::Numeric("sparse matrix entry is not finite".into()));
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().expect("previous entry") += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    #[must_use]
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    #[must_use]
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), entries).expect("dense entries are in range")
    }

    #[must_use]
    pub fn nrows(&self) -> usize {
        self.n_rows
    }

    #[must_use]
    pub fn ncols(&self) -> usize {
        self.n_cols
    }

    /// Number of stored entries.
    #[must_use]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    #[must_use]
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    #[must_use]
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    #[must_use]
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.iter() {
            m[(i, j)] += v;
        }
        m
    }

    /// `out += self * x`.
    pub fn mul_add(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        for (i, o) in out.iter_mut().enumerate().take(self.n_rows) {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *o += acc;
        }
    }

    /// `out += (self .* self) * x`, the diagonal of `W diag(x) W^T`.
    pub fn mul_sq_add(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n_rows) {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let w = self.values[k];
                acc += w * w * x[self.col_idx[k]];
            }
            *o += acc;
        }
    }

    #[must_use]
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        self.mul_add(x, &mut out);
        out
    }

    #[must_use]
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n_rows, x.ncols());
        for c in 0..x.ncols() {
            let col: Vec<f64> = x.column(c).iter().copied().collect();
            let y = self.mul_vec(&col);
            out.column_mut(c).copy_from_slice(&y);
        }
        out
    }
}

/// `out += (m .* m) * x` for a dense matrix.
pub fn dense_mul_sq_add(m: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    for j in 0..m.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        for (i, w) in m.column(j).iter().enumerate() {
            out[i] += w * w * xj;
        }
    }
}

/// `out += m * x` for a dense matrix.
pub fn dense_mul_add(m: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    for j in 0..m.ncols() {
        let xj = x[j];
        for (i, w) in m.column(j).iter().enumerate() {
            out[i] += w * xj;
        }
    }
}

const BLOCK: usize = 16;
const MAX_SWEEPS: usize = 20_000;

/// Largest eigenvalue modulus of a square sparse matrix.
///
/// Block subspace iteration with Rayleigh-Ritz on the projected matrix, so
/// complex-conjugate dominant pairs are handled. Falls back to a dense Schur
/// decomposition if the iteration stalls.
pub fn spectral_radius(w: &SparseMatrix, rng: &RngStream) -> Result<f64> {
    let n = w.nrows();
    if n != w.ncols() {
        return Err(Error::Shape(format!("spectral radius of a {}x{} matrix", n, w.ncols())));
    }
    if n == 0 || w.is_zero() {
        return Ok(0.0);
    }
    if n <= BLOCK {
        return Ok(dense_spectral_radius(&w.to_dense()));
    }
    let mut g = rng.rng();
    let start = DMatrix::from_fn(n, BLOCK, |_, _| standard_normal(&mut g));
    let mut q = start.qr().q();
    let mut prev = f64::NAN;
    let mut stable = 0;
    for _ in 0..MAX_SWEEPS {
        let z = w.mul_dense(&q);
        if z.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }
        let h = q.transpose() * &z;
        let rho = h
            .complex_eigenvalues()
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if (rho - prev).abs() <= 1e-14 * rho.max(f64::MIN_POSITIVE) {
            stable += 1;
            if stable >= 3 {
                return Ok(rho);
            }
        } else {
            stable = 0;
        }
        prev = rho;
        q = z.qr().q();
    }
    Ok(dense_spectral_radius(&w.to_dense()))
}

/// Spectral radius from a full dense eigenvalue computation.
#[must_use]
pub fn dense_spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

/// Solves `min ||A X - B||^2 + ridge ||X||^2` by Householder QR.
///
/// Reports a singular system when the triangular factor has a diagonal
/// entry below `1e-12` of its largest one.
pub fn least_squares(a: &DMatrix<f64>, b: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::Shape(format!(
            "design has {} rows, targets have {}",
            a.nrows(),
            b.nrows()
        )));
    }
    if !(ridge >= 0.0) {
        return Err(Error::Config(format!("ridge must be >= 0, got {ridge}")));
    }
    let d = a.ncols();
    let (a, b) = if ridge > 0.0 {
        let mut aa = DMatrix::zeros(a.nrows() + d, d);
        aa.rows_mut(0, a.nrows()).copy_from(a);
        let sr = ridge.sqrt();
        for i in 0..d {
            aa[(a.nrows() + i, i)] = sr;
        }
        let mut bb = DMatrix::zeros(b.nrows() + d, b.ncols());
        bb.rows_mut(0, b.nrows()).copy_from(b);
        (aa, bb)
    } else {
        (a.clone(), b.clone())
    };
    if a.nrows() < d {
        return Err(Error::Singular(format!(
            "{} equations for {} unknowns; add ridge or more data",
            a.nrows(),
            d
        )));
    }
    let qr = a.qr();
    let r = qr.r();
    let diag_max = (0..d).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if let Some(i) = (0..d).find(|&i| !(r[(i, i)].abs() > 1e-12 * diag_max)) {
        return Err(Error::Singular(format!(
            "regressor matrix is rank deficient at column {i}"
        )));
    }
    let qtb = qr.q().transpose() * b;
    r.solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))
}

/// Cholesky succeeds.
#[must_use]
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.clone().cholesky().is_some()
}

/// Copies a slice into a column vector.
#[must_use]
pub fn vector(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

//! Diagonal Gaussian beliefs, linear moment propagation and seeded sampling.
//!
//! Variances are stored as variances throughout. A variance of zero is a
//! point mass and is accepted by every operation here.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar Gaussian `N(mean, variance)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaussian1D {
    pub mean: f64,
    pub variance: f64,
}

impl Gaussian1D {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() || variance < 0.0 {
            return Err(Error::Domain(format!(
                "invalid Gaussian (mean {mean}, variance {variance})"
            )));
        }
        Ok(Self { mean, variance })
    }

    #[must_use]
    pub fn point(mean: f64) -> Self {
        Self { mean, variance: 0.0 }
    }

    /// Density at `x`. Only meaningful for positive variance.
    #[must_use]
    pub fn pdf(&self, x: f64) -> f64 {
        let d = x - self.mean;
        (-0.5 * d * d / self.variance).exp() / (2.0 * std::f64::consts::PI * self.variance).sqrt()
    }

    /// Cumulative distribution at `x`; a step function for a point mass.
    #[must_use]
    pub fn cdf(&self, x: f64) -> f64 {
        if self.variance == 0.0 {
            return if x < self.mean { 0.0 } else { 1.0 };
        }
        0.5 * libm::erfc(-(x - self.mean) / (2.0 * self.variance).sqrt())
    }
}

/// Independent Gaussian per coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalGaussian {
    mean: Vec<f64>,
    variance: Vec<f64>,
}

impl DiagonalGaussian {
    pub fn new(mean: Vec<f64>, variance: Vec<f64>) -> Result<Self> {
        if mean.len() != variance.len() {
            return Err(Error::Shape(format!(
                "mean has {} entries, variance has {}",
                mean.len(),
                variance.len()
            )));
        }
        if let Some(i) = mean.iter().position(|m| !m.is_finite()) {
            return Err(Error::Domain(format!("mean[{i}] is not finite")));
        }
        if let Some(i) = variance.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain(format!(
                "variance[{i}] = {} is negative or not finite",
                variance[i]
            )));
        }
        Ok(Self { mean, variance })
    }

    /// Point mass at `mean`.
    #[must_use]
    pub fn point(mean: Vec<f64>) -> Self {
        let variance = vec![0.0; mean.len()];
        Self { mean, variance }
    }

    /// `N(mean, variance * I)`.
    pub fn isotropic(mean: Vec<f64>, variance: f64) -> Result<Self> {
        let v = vec![variance; mean.len()];
        Self::new(mean, v)
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    #[must_use]
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    #[must_use]
    pub fn variance(&self) -> &[f64] {
        &self.variance
    }

    #[must_use]
    pub fn get(&self, i: usize) -> Gaussian1D {
        Gaussian1D {
            mean: self.mean[i],
            variance: self.variance[i],
        }
    }

    #[must_use]
    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.mean, self.variance)
    }

    /// Concatenates several independent blocks into one belief.
    #[must_use]
    pub fn concat(parts: &[&DiagonalGaussian]) -> Self {
        let mut mean = Vec::new();
        let mut variance = Vec::new();
        for p in parts {
            mean.extend_from_slice(&p.mean);
            variance.extend_from_slice(&p.variance);
        }
        Self { mean, variance }
    }

    /// Same means with every variance set to zero.
    #[must_use]
    pub fn collapsed(&self) -> Self {
        Self::point(self.mean.clone())
    }
}

/// A reproducible random stream: identical `(seed, stream)` pairs always give
/// identical sequences, independent of thread scheduling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    #[must_use]
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    #[must_use]
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// ChaCha8 generator keyed by the seed, positioned on this stream.
    #[must_use]
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Derived stream for an independent sub-task.
    #[must_use]
    pub fn substream(&self, id: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(self.stream)),
            stream: id,
        }
    }
}

/// Draws one standard normal variate (ziggurat method).
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Propagates a diagonal Gaussian through `W x + bias`, keeping only the
/// diagonal of the output covariance.
pub fn linear_transform(
    x: &DiagonalGaussian,
    w: &DMatrix<f64>,
    bias: &[f64],
) -> Result<DiagonalGaussian> {
    if w.ncols() != x.dim() {
        return Err(Error::Shape(format!(
            "matrix has {} columns but belief has dimension {}",
            w.ncols(),
            x.dim()
        )));
    }
    if bias.len() != w.nrows() {
        return Err(Error::Shape(format!(
            "bias has {} entries but matrix has {} rows",
            bias.len(),
            w.nrows()
        )));
    }
    let mut mean = bias.to_vec();
    let mut variance = vec![0.0; w.nrows()];
    for j in 0..w.ncols() {
        let (m, v) = (x.mean[j], x.variance[j]);
        for (i, wij) in w.column(j).iter().enumerate() {
            mean[i] += wij * m;
            variance[i] += wij * wij * v;
        }
    }
    Ok(DiagonalGaussian { mean, variance })
}

/// Product of two Gaussian densities: `N(x; a) N(x; b) = scale * N(x; c)`.
pub fn gaussian_product(a: Gaussian1D, b: Gaussian1D) -> Result<(f64, Gaussian1D)> {
    if a.variance <= 0.0 || b.variance <= 0.0 {
        return Err(Error::Domain(
            "gaussian_product needs strictly positive variances".into(),
        ));
    }
    let sum = a.variance + b.variance;
    let d = a.mean - b.mean;
    let scale = (-0.5 * d * d / sum).exp() / (2.0 * std::f64::consts::PI * sum).sqrt();
    let variance = a.variance * b.variance / sum;
    let mean = (a.mean * b.variance + b.mean * a.variance) / sum;
    Ok((scale, Gaussian1D { mean, variance }))
}

/// Draws `n` i.i.d. rows from `x`. Rows are generated in order, coordinates
/// left to right, so the result depends only on `rng`.
pub fn sample(x: &DiagonalGaussian, n: usize, rng: &RngStream) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::Shape("sample count must be at least 1".into()));
    }
    let d = x.dim();
    let sd: Vec<f64> = x.variance.iter().map(|v| v.sqrt()).collect();
    let mut g = rng.rng();
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        for j in 0..d {
            data.push(x.mean[j] + sd[j] * standard_normal(&mut g));
        }
    }
    Ok(DMatrix::from_row_slice(n, d, &data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_zero_maps() {
        let x = DiagonalGaussian::new(vec![1.0, -2.0], vec![0.5, 3.0]).unwrap();
        let id = DMatrix::identity(2, 2);
        assert_eq!(linear_transform(&x, &id, &[0.0, 0.0]).unwrap(), x);
        let z = DMatrix::zeros(3, 2);
        let y = linear_transform(&x, &z, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(y.mean(), &[1.0, 2.0, 3.0]);
        assert_eq!(y.variance(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn shape_errors() {
        let x = DiagonalGaussian::point(vec![0.0; 3]);
        assert!(linear_transform(&x, &DMatrix::zeros(2, 2), &[0.0; 2]).is_err());
        assert!(linear_transform(&x, &DMatrix::zeros(2, 3), &[0.0; 3]).is_err());
        assert!(DiagonalGaussian::new(vec![0.0], vec![-1.0]).is_err());
    }

    #[test]
    fn product_of_standard_normals() {
        let a = Gaussian1D::new(0.0, 1.0).unwrap();
        let (s, c) = gaussian_product(a, a).unwrap();
        assert_eq!(c.mean, 0.0);
        assert_eq!(c.variance, 0.5);
        assert!((s - 0.5 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert!(gaussian_product(a, Gaussian1D::point(0.0)).is_err());
    }

    #[test]
    fn point_mass_samples() {
        let x = DiagonalGaussian::point(vec![1.5, -0.25]);
        let s = sample(&x, 10, &RngStream::new(3)).unwrap();
        assert!(s.row_iter().all(|r| r[0] == 1.5 && r[1] == -0.25));
    }

    #[test]
    fn streams_differ_and_repeat() {
        let x = DiagonalGaussian::isotropic(vec![0.0; 2], 1.0).unwrap();
        let r = RngStream::new(7);
        assert_eq!(sample(&x, 5, &r).unwrap(), sample(&x, 5, &r).unwrap());
        assert_ne!(
            sample(&x, 5, &r).unwrap(),
            sample(&x, 5, &r.substream(1)).unwrap()
        );
        assert_ne!(r.substream(1), r.substream(2));
    }
}

//! Sampling estimates of activation moments.

use super::{check_variance, Activation, MomentSet};
use crate::error::{Error, Result};
use crate::gaussian::{standard_normal, RngStream};

/// Streaming central moments up to fourth order (Welford/Terriberry updates).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningMoments {
    n: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl RunningMoments {
    #[must_use]
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let dn = delta / n;
        let dn2 = dn * dn;
        let term1 = delta * dn * n1;
        self.mean += dn;
        self.m4 += term1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * self.m2 - 4.0 * dn * self.m3;
        self.m3 += term1 * dn * (n - 2.0) - 3.0 * dn * self.m2;
        self.m2 += term1;
    }

    #[must_use]
    pub fn count(&self) -> u64 {
        self.n
    }

    #[must_use]
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    #[must_use]
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Population central moment of order 2, 3 or 4.
    #[must_use]
    pub fn central(&self, order: u32) -> f64 {
        let n = self.n.max(1) as f64;
        match order {
            2 => self.m2 / n,
            3 => self.m3 / n,
            4 => self.m4 / n,
            _ => 0.0,
        }
    }

    #[must_use]
    pub fn skewness(&self) -> f64 {
        let v = self.central(2);
        if v > 0.0 {
            self.central(3) / v.powf(1.5)
        } else {
            0.0
        }
    }

    #[must_use]
    pub fn kurtosis(&self) -> f64 {
        let v = self.central(2);
        if v > 0.0 {
            self.central(4) / (v * v)
        } else {
            3.0
        }
    }
}

/// Monte Carlo moments together with their standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub moments: MomentSet,
    pub mean_se: f64,
    pub variance_se: f64,
    pub samples: usize,
}

/// Samples `f(mu + sqrt(var) Z)` `n` times and summarizes.
pub fn mc_estimate(
    activation: Activation,
    mu: f64,
    var: f64,
    n: usize,
    rng: &RngStream,
) -> Result<McEstimate> {
    check_variance(var)?;
    if n < 2 {
        return Err(Error::Config(format!("Monte Carlo needs at least 2 samples, got {n}")));
    }
    let sd = var.sqrt();
    let mut g = rng.rng();
    let mut acc = RunningMoments::new();
    for _ in 0..n {
        acc.push(activation.eval(mu + sd * standard_normal(&mut g)));
    }
    let variance = acc.variance();
    let nf = n as f64;
    let m4 = acc.central(4);
    let v2 = acc.central(2);
    Ok(McEstimate {
        moments: MomentSet {
            mean: acc.mean(),
            variance,
            skewness: Some(acc.skewness()),
            kurtosis: Some(acc.kurtosis()),
            variance_deficit: 0.0,
        },
        mean_se: (variance / nf).sqrt(),
        variance_se: ((m4 - v2 * v2).max(0.0) / nf).sqrt(),
        samples: n,
    })
}

/// Sample mean and unbiased variance only; cheaper than [`mc_estimate`].
/// Sums are shifted by the first value to limit cancellation.
pub fn mc_mean_variance(
    activation: Activation,
    mu: f64,
    var: f64,
    n: usize,
    rng: &RngStream,
) -> Result<(f64, f64)> {
    check_variance(var)?;
    if n < 2 {
        return Err(Error::Config(format!("Monte Carlo needs at least 2 samples, got {n}")));
    }
    let sd = var.sqrt();
    let mut g = rng.rng();
    let shift = activation.eval(mu + sd * standard_normal(&mut g));
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 1..n {
        let d = activation.eval(mu + sd * standard_normal(&mut g)) - shift;
        s1 += d;
        s2 += d * d;
    }
    let nf = n as f64;
    let variance = ((s2 - s1 * s1 / nf) / (nf - 1.0)).max(0.0);
    Ok((shift + s1 / nf, variance))
}

/// Sample mean, variance, skewness and kurtosis of `f` over `n` Gaussian draws.
pub fn mc_moments(
    activation: Activation,
    mu: f64,
    var: f64,
    n: usize,
    rng: &RngStream,
) -> Result<MomentSet> {
    Ok(mc_estimate(activation, mu, var, n, rng)?.moments)
}

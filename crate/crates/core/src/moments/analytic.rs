//! Closed-form moment approximations for `tanh` of a Gaussian.

use std::f64::consts::PI;

use super::check_variance;
use crate::error::Result;

/// Mean of `tanh(N(mu, var))` from the logistic/probit matching
/// `2 / (1 + exp(-mu / sqrt(3 var / pi^2 + 1/4))) - 1`.
///
/// Evaluated as the equal `tanh(mu / (2 sqrt(3 var / pi^2 + 1/4)))`, which is
/// exactly `tanh(mu)` for a point mass.
pub fn analytic_tanh_mean(mu: f64, var: f64) -> Result<f64> {
    check_variance(var)?;
    let scale = (3.0 * var / (PI * PI) + 0.25).sqrt();
    Ok((mu / (2.0 * scale)).tanh())
}

/// Variance of `tanh(N(mu, var))` using a Gaussian-shaped approximation to
/// `1 - tanh^2`, clamped below at zero.
pub fn analytic_tanh_variance(mu: f64, var: f64) -> Result<f64> {
    check_variance(var)?;
    let mean = analytic_tanh_mean(mu, var)?;
    let width = 2.0 / PI + var;
    // sqrt(2 pi (2/pi + var)) written so a point mass at zero gives exactly 2.
    let norm = (4.0 + 2.0 * PI * var).sqrt();
    let v = 1.0 - 2.0 / norm * (-mu * mu / (2.0 * width)).exp() - mean * mean;
    Ok(v.max(0.0))
}

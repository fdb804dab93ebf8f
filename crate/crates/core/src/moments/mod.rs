//! Output moments of an activation applied to a Gaussian input.
//!
//! Three interchangeable engines are provided: Monte Carlo sampling, a closed
//! form approximation for `tanh`, and exact integration of a cubic spline
//! interpolant with analytic tails. The spline engine also has computable
//! error bounds.

mod analytic;
mod bounds;
mod integrals;
mod monte_carlo;
mod spline;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{DiagonalGaussian, RngStream};

pub use analytic::{analytic_tanh_mean, analytic_tanh_variance};
pub use bounds::{fourth_derivative_sup, mean_error_bound, points_for_tolerance, variance_error_bound};
pub use integrals::segment_integral;
pub use monte_carlo::{mc_estimate, mc_mean_variance, mc_moments, McEstimate, RunningMoments};
pub use spline::{build_spline_table, spline_moments, CubicSpline, EndCondition, Mesh, SplineTable};

/// Behaviour of an activation outside the spline mesh.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Tail {
    /// `f(z) ~ c`.
    Constant(f64),
    /// `f(z) ~ z`.
    Linear,
}

impl Tail {
    /// Tail of `f^p`, written as `coeff * z^degree`.
    pub(crate) fn power(self, p: u32) -> (f64, u32) {
        match self {
            Tail::Constant(c) => (c.powi(p as i32), 0),
            Tail::Linear => (1.0, p),
        }
    }
}

/// Supported activation functions. Swish uses `beta = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
    Swish,
    Relu,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub const ALL: [Activation; 4] = [Self::Tanh, Self::Sigmoid, Self::Swish, Self::Relu];

    #[must_use]
    pub fn eval(self, z: f64) -> f64 {
        match self {
            Self::Tanh => z.tanh(),
            Self::Sigmoid => sigmoid(z),
            Self::Swish => z * sigmoid(z),
            Self::Relu => z.max(0.0),
        }
    }

    #[must_use]
    pub fn left_tail(self) -> Tail {
        match self {
            Self::Tanh => Tail::Constant(-1.0),
            _ => Tail::Constant(0.0),
        }
    }

    #[must_use]
    pub fn right_tail(self) -> Tail {
        match self {
            Self::Tanh | Self::Sigmoid => Tail::Constant(1.0),
            Self::Swish | Self::Relu => Tail::Linear,
        }
    }

    /// `sup |f|` for bounded activations.
    #[must_use]
    pub fn magnitude_bound(self) -> Option<f64> {
        match self {
            Self::Tanh | Self::Sigmoid => Some(1.0),
            Self::Swish | Self::Relu => None,
        }
    }

    /// Whether `f` has a bounded fourth derivative, which the error bounds need.
    #[must_use]
    pub fn is_smooth(self) -> bool {
        !matches!(self, Self::Relu)
    }

    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            Self::Tanh => "tanh",
            Self::Sigmoid => "sigmoid",
            Self::Swish => "swish",
            Self::Relu => "relu",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown activation '{s}'")))
    }
}

/// Mean and variance of `f(Z)`, optionally with standardized skewness and kurtosis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub mean: f64,
    pub variance: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    /// How far below zero the raw variance estimate was before clamping.
    pub variance_deficit: f64,
}

impl MomentSet {
    /// Moments of a point mass at `value`.
    #[must_use]
    pub fn point(value: f64, order: u32) -> Self {
        let higher = order >= 4;
        Self {
            mean: value,
            variance: 0.0,
            skewness: higher.then_some(0.0),
            kurtosis: higher.then_some(3.0),
            variance_deficit: 0.0,
        }
    }

    /// Builds moments from raw moments `E[f^p]`, `p = 1..=raw.len()`.
    pub(crate) fn from_raw(raw: &[f64]) -> Self {
        let a1 = raw[0];
        let centred = raw[1] - a1 * a1;
        let variance = centred.max(0.0);
        let variance_deficit = (-centred).max(0.0);
        let (mut skewness, mut kurtosis) = (None, None);
        if raw.len() >= 4 {
            let (a2, a3, a4) = (raw[1], raw[2], raw[3]);
            let m3 = a3 - 3.0 * a1 * a2 + 2.0 * a1.powi(3);
            let m4 = a4 - 4.0 * a1 * a3 + 6.0 * a1 * a1 * a2 - 3.0 * a1.powi(4);
            if variance > 0.0 {
                skewness = Some(m3 / variance.powf(1.5));
                kurtosis = Some(m4 / (variance * variance));
            } else {
                skewness = Some(0.0);
                kurtosis = Some(3.0);
            }
        }
        Self {
            mean: a1,
            variance,
            skewness,
            kurtosis,
            variance_deficit,
        }
    }
}

/// Engine selector used by configuration and the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Mc,
    Analytic,
    Spline,
}

impl EngineKind {
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            Self::Mc => "mc",
            Self::Analytic => "analytic",
            Self::Spline => "spline",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc" => Ok(Self::Mc),
            "analytic" => Ok(Self::Analytic),
            "spline" => Ok(Self::Spline),
            _ => Err(Error::Config(format!(
                "unknown engine '{s}' (expected analytic, spline or mc)"
            ))),
        }
    }
}

/// A ready-to-use moment engine.
///
/// The Monte Carlo variant is a pure function of its stream and the `call`
/// index passed to [`Engine::moments`], so results never depend on call order
/// or threading.
#[derive(Clone, Debug)]
pub enum Engine {
    Analytic,
    Spline(Arc<SplineTable>),
    MonteCarlo { samples: usize, stream: RngStream },
}

impl Engine {
    #[must_use]
    pub fn kind(&self) -> EngineKind {
        match self {
            Self::Analytic => EngineKind::Analytic,
            Self::Spline(_) => EngineKind::Spline,
            Self::MonteCarlo { .. } => EngineKind::Mc,
        }
    }

    /// Moments of `activation(N(mu, var))` up to `order` (2 or 4).
    pub fn moments(
        &self,
        activation: Activation,
        mu: f64,
        var: f64,
        order: u32,
        call: u64,
    ) -> Result<MomentSet> {
        match self {
            Self::Analytic => {
                if activation != Activation::Tanh {
                    return Err(Error::Unsupported {
                        engine: "analytic",
                        activation: activation.name(),
                    });
                }
                if order > 2 {
                    return Err(Error::Config(
                        "the analytic engine only provides mean and variance".into(),
                    ));
                }
                Ok(MomentSet {
                    mean: analytic_tanh_mean(mu, var)?,
                    variance: analytic_tanh_variance(mu, var)?,
                    skewness: None,
                    kurtosis: None,
                    variance_deficit: 0.0,
                })
            }
            Self::Spline(table) => {
                if table.activation() != activation {
                    return Err(Error::Config(format!(
                        "spline table was built for {} but {} was requested",
                        table.activation(),
                        activation
                    )));
                }
                spline_moments(table, mu, var, order)
            }
            Self::MonteCarlo { samples, stream } => {
                let rng = stream.substream(call);
                if order >= 4 {
                    return mc_moments(activation, mu, var, *samples, &rng);
                }
                let (mean, variance) = mc_mean_variance(activation, mu, var, *samples, &rng)?;
                Ok(MomentSet { mean, variance, skewness: None, kurtosis: None, variance_deficit: 0.0 })
            }
        }
    }

    /// Element-wise mean and variance of `activation(x)`; `call_base + i` seeds element `i`.
    pub fn propagate(
        &self,
        activation: Activation,
        x: &DiagonalGaussian,
        call_base: u64,
    ) -> Result<DiagonalGaussian> {
        let mut mean = Vec::with_capacity(x.dim());
        let mut variance = Vec::with_capacity(x.dim());
        for (i, (&m, &v)) in x.mean().iter().zip(x.variance()).enumerate() {
            let r = self.moments(activation, m, v, 2, call_base.wrapping_add(i as u64))?;
            mean.push(r.mean);
            variance.push(r.variance);
        }
        DiagonalGaussian::new(mean, variance)
    }
}

/// Mean and variance through `engine`.
pub fn moments(engine: &Engine, activation: Activation, mu: f64, var: f64) -> Result<MomentSet> {
    engine.moments(activation, mu, var, 2, 0)
}

pub(crate) fn check_variance(var: f64) -> Result<()> {
    if var >= 0.0 && var.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("variance must be finite and >= 0, got {var}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_dispatch() {
        let m = moments(&Engine::Analytic, Activation::Tanh, 0.0, 1.0).unwrap();
        assert_eq!(m.mean, 0.0);
        assert_eq!(m.variance, analytic_tanh_variance(0.0, 1.0).unwrap());
        assert!(matches!(
            moments(&Engine::Analytic, Activation::Sigmoid, 0.0, 1.0),
            Err(Error::Unsupported { .. })
        ));
    }

    #[test]
    fn spline_table_must_match_activation() {
        let t = Arc::new(build_spline_table(Activation::Sigmoid, -10.0, 10.0, 41, 2).unwrap());
        assert!(moments(&Engine::Spline(t), Activation::Tanh, 0.0, 1.0).is_err());
    }

    #[test]
    fn raw_to_central_moments() {
        // Bernoulli(1/2) on {-1, 1}: mean 0, variance 1, skew 0, kurtosis 1.
        let m = MomentSet::from_raw(&[0.0, 1.0, 0.0, 1.0]);
        assert_eq!((m.mean, m.variance), (0.0, 1.0));
        assert_eq!(m.skewness, Some(0.0));
        assert_eq!(m.kurtosis, Some(1.0));
        let c = MomentSet::from_raw(&[1.0, 1.0 - 1e-12]);
        assert_eq!(c.variance, 0.0);
        assert!(c.variance_deficit > 0.0);
    }

    #[test]
    fn activations() {
        assert_eq!(Activation::Relu.eval(-2.0), 0.0);
        assert!((Activation::Sigmoid.eval(0.0) - 0.5).abs() < 1e-16);
        assert!((Activation::Swish.eval(-800.0)).abs() < 1e-300);
        assert_eq!("swish".parse::<Activation>().unwrap(), Activation::Swish);
        assert!("elu".parse::<Activation>().is_err());
    }
}

//! Gaussian uncertainty propagation through activation functions and
//! probabilistic echo state networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`gaussian`]: diagonal Gaussian beliefs, linear propagation, seeded sampling.
//! * [`moments`]: mean/variance (and higher moments) of `f(N(mu, var))` via
//!   Monte Carlo, a closed form for `tanh`, or cubic-spline integration with
//!   error bounds.
//! * [`reservoir`]: a leaky echo state network with batch and recursive least
//!   squares readouts.
//! * [`probabilistic`]: the same network carrying a Gaussian belief over its state.
//! * [`cartpole`]: cart-pole simulation and dataset generation.
//! * [`harness`]: experiment drivers that write CSV results.

pub mod cartpole;
pub mod error;
pub mod format;
pub mod gaussian;
pub mod harness;
pub mod linalg;
pub mod moments;
pub mod probabilistic;
pub mod reservoir;

pub use error::{Error, Result};
pub use gaussian::{DiagonalGaussian, Gaussian1D, RngStream};
pub use moments::{Activation, Engine, EngineKind, MomentSet, SplineTable};

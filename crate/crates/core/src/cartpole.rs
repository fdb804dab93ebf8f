//! Frictionless cart-pole simulation and regression datasets.
//!
//! The pole angle is measured from upright, so `theta = pi` hangs down.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{standard_normal, RngStream};
use crate::reservoir::{Dataset, InputMap, Split};

/// Physical constants in SI units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartPoleParams {
    pub cart_mass: f64,
    pub pole_mass: f64,
    /// Distance from pivot to the pole's centre of mass.
    pub half_length: f64,
    pub gravity: f64,
    pub dt: f64,
    pub force_limit: f64,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        Self {
            cart_mass: 1.0,
            pole_mass: 0.1,
            half_length: 0.5,
            gravity: 9.81,
            dt: 0.02,
            force_limit: 10.0,
        }
    }
}

impl CartPoleParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cart_mass", self.cart_mass),
            ("pole_mass", self.pole_mass),
            ("half_length", self.half_length),
            ("dt", self.dt),
            ("force_limit", self.force_limit),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.gravity.is_finite() {
            return Err(Error::Config("gravity must be finite".into()));
        }
        Ok(())
    }

    fn total_mass(&self) -> f64 {
        self.cart_mass + self.pole_mass
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartPoleState {
    pub x: f64,
    pub theta: f64,
    pub x_dot: f64,
    pub omega: f64,
}

impl CartPoleState {
    /// Resting with the pole hanging straight down.
    #[must_use]
    pub fn hanging() -> Self {
        Self { x: 0.0, theta: PI, x_dot: 0.0, omega: 0.0 }
    }

    #[must_use]
    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.theta, self.x_dot, self.omega]
    }

    #[must_use]
    pub fn from_array(a: [f64; 4]) -> Self {
        Self { x: a[0], theta: a[1], x_dot: a[2], omega: a[3] }
    }

    /// Reflection through the vertical axis.
    #[must_use]
    pub fn mirrored(self) -> Self {
        Self::from_array(self.to_array().map(|v| -v))
    }

    fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// `(x_dot, omega, x_ddot, omega_dot)` under horizontal force `u`.
#[must_use]
pub fn cartpole_derivative(s: &CartPoleState, u: f64, p: &CartPoleParams) -> [f64; 4] {
    let (sin, cos) = s.theta.sin_cos();
    let m = p.total_mass();
    let ml = p.pole_mass * p.half_length;
    let temp = (u + ml * s.omega * s.omega * sin) / m;
    let omega_dot =
        (p.gravity * sin - cos * temp) / (p.half_length * (4.0 / 3.0 - p.pole_mass * cos * cos / m));
    let x_ddot = temp - ml * omega_dot * cos / m;
    [s.x_dot, s.omega, x_ddot, omega_dot]
}

/// Total mechanical energy, zero potential at the pivot height.
#[must_use]
pub fn energy(s: &CartPoleState, p: &CartPoleParams) -> f64 {
    let m = p.total_mass();
    let l = p.half_length;
    0.5 * m * s.x_dot * s.x_dot
        + p.pole_mass * l * s.theta.cos() * s.x_dot * s.omega
        + 2.0 / 3.0 * p.pole_mass * l * l * s.omega * s.omega
        + p.pole_mass * p.gravity * l * s.theta.cos()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Rk4,
    Euler,
}

fn axpy(s: &CartPoleState, d: &[f64; 4], h: f64) -> CartPoleState {
    CartPoleState {
        x: s.x + h * d[0],
        theta: s.theta + h * d[1],
        x_dot: s.x_dot + h * d[2],
        omega: s.omega + h * d[3],
    }
}

/// Advances one step of length `dt` with `u` held constant.
#[must_use]
pub fn integrate_step(s: &CartPoleState, u: f64, dt: f64, p: &CartPoleParams, integrator: Integrator) -> CartPoleState {
    match integrator {
        Integrator::Euler => axpy(s, &cartpole_derivative(s, u, p), dt),
        Integrator::Rk4 => {
            let k1 = cartpole_derivative(s, u, p);
            let k2 = cartpole_derivative(&axpy(s, &k1, 0.5 * dt), u, p);
            let k3 = cartpole_derivative(&axpy(s, &k2, 0.5 * dt), u, p);
            let k4 = cartpole_derivative(&axpy(s, &k3, dt), u, p);
            let mut d = [0.0; 4];
            for i in 0..4 {
                d[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
            }
            axpy(s, &d, dt)
        }
    }
}

/// States `0..=n` and the controls applied between them.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<CartPoleState>,
    pub controls: Vec<f64>,
}

impl Trajectory {
    /// Velocity pair `[x_dot, omega]` after step `k`.
    #[must_use]
    pub fn velocity_target(&self, k: usize) -> [f64; 2] {
        let s = self.states[k + 1];
        [s.x_dot, s.omega]
    }
}

/// Simulates `n_steps` steps. `control(k, state)` is clipped to the force limit.
pub fn cartpole_rollout(
    s0: CartPoleState,
    n_steps: usize,
    mut control: impl FnMut(usize, &CartPoleState) -> f64,
    p: &CartPoleParams,
    integrator: Integrator,
) -> Result<Trajectory> {
    p.validate()?;
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut controls = Vec::with_capacity(n_steps);
    states.push(s0);
    let mut s = s0;
    for k in 0..n_steps {
        let u = control(k, &s).clamp(-p.force_limit, p.force_limit);
        s = integrate_step(&s, u, p.dt, p, integrator);
        if !s.is_finite() || !u.is_finite() {
            return Err(Error::Divergence { step: k });
        }
        controls.push(u);
        states.push(s);
    }
    Ok(Trajectory { states, controls })
}

/// Exploratory force signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Excitation {
    /// Sines with seeded frequencies in `[min_hz, max_hz]` and phases;
    /// the sum peaks at `amplitude`.
    SumOfSines { amplitude: f64, components: usize, min_hz: f64, max_hz: f64 },
    /// First-order low-pass filtered white noise, `u' = a u + (1-a) amplitude e`.
    FilteredNoise { amplitude: f64, smoothing: f64 },
}

impl Default for Excitation {
    fn default() -> Self {
        Self::SumOfSines { amplitude: 5.0, components: 5, min_hz: 0.1, max_hz: 1.5 }
    }
}

impl Excitation {
    /// Open-loop force sequence of length `n`.
    pub fn signal(&self, n: usize, dt: f64, rng: &RngStream) -> Result<Vec<f64>> {
        let mut g = rng.rng();
        match *self {
            Self::SumOfSines { amplitude, components, min_hz, max_hz } => {
                if components == 0 || !(min_hz > 0.0 && min_hz <= max_hz) {
                    return Err(Error::Config("sum-of-sines needs components >= 1 and 0 < min_hz <= max_hz".into()));
                }
                let waves: Vec<(f64, f64)> = (0..components)
                    .map(|_| (g.random_range(min_hz..=max_hz), g.random_range(0.0..2.0 * PI)))
                    .collect();
                let a = amplitude / components as f64;
                Ok((0..n)
                    .map(|k| {
                        let t = k as f64 * dt;
                        a * waves.iter().map(|(f, ph)| (2.0 * PI * f * t + ph).sin()).sum::<f64>()
                    })
                    .collect())
            }
            Self::FilteredNoise { amplitude, smoothing } => {
                if !(0.0..1.0).contains(&smoothing) {
                    return Err(Error::Config("smoothing must be in [0, 1)".into()));
                }
                let mut u = 0.0;
                Ok((0..n)
                    .map(|_| {
                        u = smoothing * u + (1.0 - smoothing) * amplitude * standard_normal(&mut g);
                        u
                    })
                    .collect())
            }
        }
    }
}

/// Everything needed to regenerate a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSpec {
    pub physics: CartPoleParams,
    pub excitation: Excitation,
    pub integrator: Integrator,
    /// Weak PD term `-kp x - kd x_dot` that keeps the cart near the origin.
    pub centering_kp: f64,
    pub centering_kd: f64,
    pub washout: usize,
    pub train: usize,
    pub test: usize,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self {
            physics: CartPoleParams::default(),
            excitation: Excitation::default(),
            integrator: Integrator::Rk4,
            centering_kp: 1.0,
            centering_kd: 1.0,
            washout: 100,
            train: 1500,
            test: 600,
        }
    }
}

impl DataSpec {
    #[must_use]
    pub fn n_steps(&self) -> usize {
        self.washout + self.train + self.test
    }

    #[must_use]
    pub fn split(&self) -> Split {
        Split { washout: self.washout, train: self.train, test: self.test }
    }
}

/// A simulated dataset and the trajectory it came from.
#[derive(Clone, Debug)]
pub struct CartPoleData {
    pub dataset: Dataset,
    pub trajectory: Trajectory,
}

/// Column names of the generated dataset, in order.
pub const INPUT_NAMES: [&str; 5] = ["x", "theta", "x_dot", "omega", "force"];
pub const TARGET_NAMES: [&str; 2] = ["next_x_dot", "next_omega"];

/// Simulates from the hanging rest state and packages rows
/// `z(k) = [x, theta, x_dot, omega, u](k)`, `y(k) = [x_dot, omega](k+1)`.
pub fn make_dataset(spec: &DataSpec, seed: u64) -> Result<CartPoleData> {
    let p = &spec.physics;
    p.validate()?;
    let n = spec.n_steps();
    if n == 0 {
        return Err(Error::Config("dataset needs at least one row".into()));
    }
    let exc = spec.excitation.signal(n, p.dt, &RngStream::new(seed))?;
    let (kp, kd) = (spec.centering_kp, spec.centering_kd);
    let trajectory = cartpole_rollout(
        CartPoleState::hanging(),
        n,
        |k, s| exc[k] - kp * s.x - kd * s.x_dot,
        p,
        spec.integrator,
    )?;
    let inputs = (0..n)
        .map(|k| {
            let s = trajectory.states[k];
            vec![s.x, s.theta, s.x_dot, s.omega, trajectory.controls[k]]
        })
        .collect();
    let targets = (0..n).map(|k| trajectory.velocity_target(k).to_vec()).collect();
    let dataset = Dataset::new(inputs, targets, spec.split())?;
    Ok(CartPoleData { dataset, trajectory })
}

/// Closed-loop input map for cart-pole rows: positions advance by the
/// trapezoid rule on the current and predicted velocities, velocities are the
/// prediction, and the force is taken from the data.
#[must_use]
pub fn input_map(p: &CartPoleParams) -> InputMap {
    let h = 0.5 * p.dt;
    let mut a = DMatrix::zeros(5, 5);
    let mut b = DMatrix::zeros(5, 2);
    a[(0, 0)] = 1.0;
    a[(0, 2)] = h;
    b[(0, 0)] = h;
    a[(1, 1)] = 1.0;
    a[(1, 3)] = h;
    b[(1, 1)] = h;
    b[(2, 0)] = 1.0;
    b[(3, 1)] = 1.0;
    InputMap::new(a, b, vec![false, false, false, false, true]).expect("fixed shapes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hanging_rest_is_fixed() {
        let p = CartPoleParams::default();
        let s = CartPoleState { x: 3.0, ..CartPoleState::hanging() };
        let d = cartpole_derivative(&s, 0.0, &p);
        assert_eq!(d[0], 0.0);
        assert_eq!(d[1], 0.0);
        // sin(pi) is 1.2e-16 in floating point.
        assert!(d[2].abs() < 1e-14 && d[3].abs() < 1e-14);
    }

    #[test]
    fn mirror_symmetry() {
        let p = CartPoleParams::default();
        let s = CartPoleState { x: 0.3, theta: 2.1, x_dot: -0.4, omega: 1.7 };
        let d = cartpole_derivative(&s, 2.5, &p);
        let m = cartpole_derivative(&s.mirrored(), -2.5, &p);
        for i in 0..4 {
            assert!((d[i] + m[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_amplitude_stays_at_rest() {
        let spec = DataSpec {
            excitation: Excitation::SumOfSines { amplitude: 0.0, components: 5, min_hz: 0.1, max_hz: 1.5 },
            washout: 5,
            train: 10,
            test: 5,
            ..DataSpec::default()
        };
        let d = make_dataset(&spec, 1).unwrap().dataset;
        assert!(d.targets().iter().flatten().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn force_is_clipped() {
        let p = CartPoleParams::default();
        let t = cartpole_rollout(CartPoleState::hanging(), 3, |_, _| 100.0, &p, Integrator::Rk4).unwrap();
        assert!(t.controls.iter().all(|&u| u == 10.0));
    }
}

//! Computable error bounds for the spline engine.

use super::spline::{spline_moments, SplineTable};
use super::Activation;
use crate::error::{Error, Result};

/// Finite-difference step for the fourth derivative. Fixed rather than tied to
/// the probe spacing: much smaller steps are swamped by rounding.
const STENCIL_STEP: f64 = 1.0 / 128.0;

/// Approximate `sup |g''''|` on `[a, b]` from a five-point stencil at `n_probe` points.
pub fn fourth_derivative_sup(g: impl Fn(f64) -> f64, a: f64, b: f64, n_probe: usize) -> f64 {
    let h = STENCIL_STEP;
    let h4 = h * h * h * h;
    let n = n_probe.max(2);
    (0..n)
        .map(|i| {
            let x = a + (b - a) * i as f64 / (n - 1) as f64;
            let d = g(x - 2.0 * h) - 4.0 * g(x - h) + 6.0 * g(x) - 4.0 * g(x + h) + g(x + 2.0 * h);
            (d / h4).abs()
        })
        .fold(0.0, f64::max)
}

/// `sup |f^p - tail|` over `(-inf, a]` and `[b, inf)`, probed out to 60 units.
pub(crate) fn tail_gap(activation: Activation, p: u32, a: f64, b: f64) -> (f64, f64) {
    let (lc, ld) = activation.left_tail().power(p);
    let (rc, rd) = activation.right_tail().power(p);
    let probes = 4001;
    let mut left = 0.0f64;
    let mut right = 0.0f64;
    for k in 0..probes {
        let u = k as f64 / (probes - 1) as f64;
        let t = 60.0 * u * u;
        let zl = a - t;
        let zr = b + t;
        left = left.max((activation.eval(zl).powi(p as i32) - lc * zl.powi(ld as i32)).abs());
        right = right.max((activation.eval(zr).powi(p as i32) - rc * zr.powi(rd as i32)).abs());
    }
    (left, right)
}

fn bound_for_power(table: &SplineTable, p: u32, mu: f64, var: f64) -> Result<f64> {
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::Domain(format!("bounds need a positive variance, got {var}")));
    }
    let m4 = table
        .fourth_derivative_sup(p)
        .ok_or(Error::NotCertified(table.activation().name()))?;
    let mesh = table.mesh();
    let s = (2.0 * var).sqrt();
    let lo = (mesh.a() - mu) / s;
    let hi = (mesh.b() - mu) / s;
    // erf(hi) - erf(lo), erf(lo) + 1 and 1 - erf(hi) without cancellation.
    let inside = if lo >= 0.0 {
        libm::erfc(lo) - libm::erfc(hi)
    } else if hi <= 0.0 {
        libm::erfc(-hi) - libm::erfc(-lo)
    } else {
        2.0 - libm::erfc(-lo) - libm::erfc(hi)
    };
    let below = libm::erfc(-lo);
    let above = libm::erfc(hi);
    let c1 = mesh.tau().powi(4) * m4 / 32.0;
    let (gap_left, gap_right) = table.tail_gap(p);
    Ok(c1 * inside + 0.5 * gap_left * below + 0.5 * gap_right * above)
}

/// Bound on `|spline mean - true mean|` for `f(N(mu, var))`.
pub fn mean_error_bound(table: &SplineTable, mu: f64, var: f64) -> Result<f64> {
    bound_for_power(table, 1, mu, var)
}

/// Bound on `|spline variance - true variance|`: the `f^2` bound plus the
/// mean bound scaled by a bound on `|spline mean + true mean|`.
///
/// For bounded activations that factor is `2 sup|f|`; otherwise it is
/// `2 |spline mean| + mean bound`.
pub fn variance_error_bound(table: &SplineTable, mu: f64, var: f64) -> Result<f64> {
    if table.max_power() < 2 {
        return Err(Error::Config("variance bound needs a table with max_power >= 2".into()));
    }
    let e1 = bound_for_power(table, 2, mu, var)?;
    let em = bound_for_power(table, 1, mu, var)?;
    let factor = match table.activation().magnitude_bound() {
        Some(m) => 2.0 * m,
        None => 2.0 * spline_moments(table, mu, var, 2)?.mean.abs() + em,
    };
    Ok(e1 + factor * em)
}

/// Smallest uniform mesh size on `[a, b]` whose mean bound is at most `tol`
/// for every input Gaussian.
pub fn points_for_tolerance(activation: Activation, a: f64, b: f64, tol: f64) -> Result<usize> {
    if !activation.is_smooth() {
        return Err(Error::NotCertified(activation.name()));
    }
    if !(a < b) {
        return Err(Error::Config(format!("need a < b, got [{a}, {b}]")));
    }
    let (gl, gr) = tail_gap(activation, 1, a, b);
    let budget = tol - gl.max(gr);
    if !(budget > 0.0) {
        return Err(Error::Config(format!(
            "tolerance {tol} is below the tail error of [{a}, {b}]; widen the mesh"
        )));
    }
    let m4 = fourth_derivative_sup(|z| activation.eval(z), a, b, 100_000);
    let tau = (16.0 * budget / m4).powf(0.25);
    let segments = ((b - a) / tau).ceil().max(3.0);
    Ok(segments as usize + 1)
}

//! Closed-form Gaussian integrals of polynomials over intervals.
//!
//! With `x = (z - mu) / s`, `s = sqrt(2 var)`, every integral reduces to
//! `J_m = (1/sqrt(pi)) * int_alpha^beta x^m exp(-x^2) dx`, which satisfies
//! `J_m = (m-1)/2 J_{m-2} + (alpha^{m-1} e^{-alpha^2} - beta^{m-1} e^{-beta^2}) / (2 sqrt(pi))`.

use crate::error::{Error, Result};

const INV_2_SQRT_PI: f64 = 0.282_094_791_773_878_14;
/// Beyond this many scaled units the Gaussian weight underflows.
const FAR: f64 = 27.0;

/// Per-node quantities shared by the two segments meeting at the node.
#[derive(Clone, Copy, Debug)]
pub(crate) struct NodeTerms {
    x: f64,
    /// `exp(-x^2)`.
    e: f64,
    /// `P(X < z)` for the input Gaussian.
    lower: f64,
    /// `P(X > z)`.
    upper: f64,
}

impl NodeTerms {
    pub(crate) fn new(z: f64, mu: f64, s: f64) -> Self {
        let x = (z - mu) / s;
        if x >= FAR {
            Self { x, e: 0.0, lower: 1.0, upper: 0.0 }
        } else if x <= -FAR {
            Self { x, e: 0.0, lower: 0.0, upper: 1.0 }
        } else {
            Self {
                x,
                e: (-x * x).exp(),
                lower: 0.5 * libm::erfc(-x),
                upper: 0.5 * libm::erfc(x),
            }
        }
    }

    pub(crate) const NEG_INF: Self = Self { x: f64::NEG_INFINITY, e: 0.0, lower: 0.0, upper: 1.0 };
    pub(crate) const POS_INF: Self = Self { x: f64::INFINITY, e: 0.0, lower: 1.0, upper: 0.0 };

    /// `x^m exp(-x^2)`, zero where the weight underflows.
    fn xe(&self, m: i32) -> f64 {
        if self.e == 0.0 {
            0.0
        } else {
            self.x.powi(m) * self.e
        }
    }
}

/// Gaussian mass between two nodes, picking the difference that avoids cancellation.
pub(crate) fn mass(lo: &NodeTerms, hi: &NodeTerms) -> f64 {
    if lo.x >= 0.0 {
        lo.upper - hi.upper
    } else if hi.x <= 0.0 {
        hi.lower - lo.lower
    } else {
        1.0 - lo.lower - hi.upper
    }
}

/// `J_0 .. J_{N-1}` over the interval between two nodes.
pub(crate) fn j_terms<const N: usize>(lo: &NodeTerms, hi: &NodeTerms) -> [f64; N] {
    let mut j = [0.0; N];
    j[0] = mass(lo, hi);
    if N > 1 {
        j[1] = (lo.e - hi.e) * INV_2_SQRT_PI;
    }
    for m in 2..N {
        let mi = m as i32;
        j[m] = 0.5 * (m - 1) as f64 * j[m - 2] + (lo.xe(mi - 1) - hi.xe(mi - 1)) * INV_2_SQRT_PI;
    }
    j
}

/// Rewrites `sum_k c_k (z - center)^k` as `sum_m e_m x^m` with `z = mu + s x`.
pub(crate) fn to_scaled_basis<const N: usize>(coeffs: &[f64; N], center: f64, mu: f64, s: f64) -> [f64; N] {
    // Taylor shift to the basis (z - mu) by repeated synthetic division.
    let delta = mu - center;
    let mut c = *coeffs;
    for i in 0..N {
        for k in (i..N - 1).rev() {
            c[k] += delta * c[k + 1];
        }
    }
    let mut sp = 1.0;
    for ck in c.iter_mut() {
        *ck *= sp;
        sp *= s;
    }
    c
}

/// `int_lo^hi p(z) N(z; mu, var) dz` for a polynomial in the local basis around `center`.
pub(crate) fn poly_integral<const N: usize>(
    coeffs: &[f64; N],
    center: f64,
    lo: &NodeTerms,
    hi: &NodeTerms,
    mu: f64,
    s: f64,
) -> f64 {
    let e = to_scaled_basis(coeffs, center, mu, s);
    let j: [f64; N] = j_terms(lo, hi);
    e.iter().zip(j.iter()).map(|(a, b)| a * b).sum()
}

/// `int_{z_lo}^{z_hi} z^k N(z; mu, var) dz` for `k <= 4`. Infinite endpoints are allowed.
pub fn segment_integral(k: u32, z_lo: f64, z_hi: f64, mu: f64, var: f64) -> Result<f64> {
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::Domain(format!("variance must be positive, got {var}")));
    }
    if k > 4 {
        return Err(Error::Domain(format!("monomial degree {k} exceeds 4")));
    }
    if z_lo.is_nan() || z_hi.is_nan() || z_lo > z_hi || !mu.is_finite() {
        return Err(Error::Domain(format!("invalid interval [{z_lo}, {z_hi}] or mean {mu}")));
    }
    let s = (2.0 * var).sqrt();
    let lo = node(z_lo, mu, s);
    let hi = node(z_hi, mu, s);
    let mut c = [0.0; 5];
    c[k as usize] = 1.0;
    Ok(poly_integral(&c, 0.0, &lo, &hi, mu, s))
}

pub(crate) fn node(z: f64, mu: f64, s: f64) -> NodeTerms {
    if z == f64::NEG_INFINITY {
        NodeTerms::NEG_INF
    } else if z == f64::INFINITY {
        NodeTerms::POS_INF
    } else {
        NodeTerms::new(z, mu, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn raw_moments_over_the_line() {
        let (mu, v) = (0.7, 1.3);
        let m = |k| segment_integral(k, -INF, INF, mu, v).unwrap();
        assert!((m(0) - 1.0).abs() < 1e-15);
        assert!((m(1) - mu).abs() < 1e-14);
        assert!((m(2) - (mu * mu + v)).abs() < 1e-14);
        assert!((m(3) - (mu.powi(3) + 3.0 * mu * v)).abs() < 1e-13);
        let m4 = mu.powi(4) + 6.0 * mu * mu * v + 3.0 * v * v;
        assert!((m(4) - m4).abs() < 1e-13);
    }

    #[test]
    fn additive_over_intervals() {
        for k in 0..=4 {
            let whole = segment_integral(k, -1.0, 2.5, 0.3, 0.5).unwrap();
            let a = segment_integral(k, -1.0, 0.4, 0.3, 0.5).unwrap();
            let b = segment_integral(k, 0.4, 2.5, 0.3, 0.5).unwrap();
            assert!((whole - a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(segment_integral(0, 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(segment_integral(5, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(segment_integral(1, 1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn taylor_shift_matches_direct_evaluation() {
        let c = [0.5, -1.0, 2.0, 0.25];
        let (center, mu, s) = (1.5, -0.3, 0.8);
        let e = to_scaled_basis(&c, center, mu, s);
        for x in [-2.0, -0.1, 0.0, 0.7, 3.0] {
            let z: f64 = mu + s * x;
            let t = z - center;
            let direct = c[0] + t * (c[1] + t * (c[2] + t * c[3]));
            let shifted = e[0] + x * (e[1] + x * (e[2] + x * e[3]));
            assert!((direct - shifted).abs() < 1e-12);
        }
    }
}

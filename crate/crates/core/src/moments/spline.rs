//! Cubic spline interpolants of `f^p` and exact Gaussian expectations of them.

use std::fmt::Write as _;
use std::path::Path;

use super::bounds::{fourth_derivative_sup, tail_gap};
use super::integrals::{self, NodeTerms};
use super::{check_variance, Activation, MomentSet};
use crate::error::{Error, Result};
use crate::format::float;

const TEXT_MAGIC: &str = "spline-table v1";
/// Probe count for the fourth-derivative estimate.
const DERIVATIVE_PROBES: usize = 100_000;

/// Sorted interpolation nodes on `[a, b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
    tau: f64,
}

impl Mesh {
    /// `n_points` equally spaced nodes from `a` to `b`.
    ///
    /// The lower half of the nodes is measured from `a` and the upper half from
    /// `b`, so a mesh symmetric about zero is symmetric bit for bit.
    pub fn uniform(a: f64, b: f64, n_points: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Config(format!("mesh needs finite a < b, got [{a}, {b}]")));
        }
        if n_points < 4 {
            return Err(Error::Config(format!("mesh needs at least 4 points, got {n_points}")));
        }
        let last = (n_points - 1) as f64;
        let nodes: Vec<f64> = (0..n_points)
            .map(|j| {
                if 2 * j < n_points {
                    a + (b - a) * (j as f64 / last)
                } else {
                    b - (b - a) * ((n_points - 1 - j) as f64 / last)
                }
            })
            .collect();
        Self::from_nodes(nodes)
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 4 {
            return Err(Error::Config("mesh needs at least 4 points".into()));
        }
        if nodes.iter().any(|z| !z.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("mesh nodes must be finite and strictly increasing".into()));
        }
        let tau = nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        Ok(Self { nodes, tau })
    }

    #[must_use]
    pub fn a(&self) -> f64 {
        self.nodes[0]
    }

    #[must_use]
    pub fn b(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    #[must_use]
    pub fn n_points(&self) -> usize {
        self.nodes.len()
    }

    #[must_use]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Largest node spacing.
    #[must_use]
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Index of the segment containing `z`, clamped to the mesh.
    #[must_use]
    pub fn segment_of(&self, z: f64) -> usize {
        let i = self.nodes.partition_point(|&n| n <= z);
        i.saturating_sub(1).min(self.nodes.len() - 2)
    }
}

/// Boundary condition for spline construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EndCondition {
    /// Zero second derivative at both ends.
    Natural,
    /// Prescribed first derivative at each end.
    Clamped { left_slope: f64, right_slope: f64 },
}

/// Piecewise cubic; segment `j` is `sum_k c[j][k] (z - z_j)^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicSpline {
    mesh: Mesh,
    coeffs: Vec<[f64; 4]>,
}

impl CubicSpline {
    pub fn interpolate(mesh: &Mesh, values: &[f64], end: EndCondition) -> Result<Self> {
        let z = mesh.nodes();
        let n = z.len();
        if values.len() != n {
            return Err(Error::Shape(format!(
                "{} values for {} nodes",
                values.len(),
                n
            )));
        }
        let h: Vec<f64> = z.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = (0..n - 1).map(|j| (values[j + 1] - values[j]) / h[j]).collect();

        // Tridiagonal system for the second derivatives.
        let mut sub = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            sub[i] = h[i - 1];
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            sup[i] = h[i];
            rhs[i] = 6.0 * (slope[i] - slope[i - 1]);
        }
        if let EndCondition::Clamped { left_slope, right_slope } = end {
            diag[0] = 2.0 * h[0];
            sup[0] = h[0];
            rhs[0] = 6.0 * (slope[0] - left_slope);
            sub[n - 1] = h[n - 2];
            diag[n - 1] = 2.0 * h[n - 2];
            rhs[n - 1] = 6.0 * (right_slope - slope[n - 2]);
        }
        let m = solve_tridiagonal(&sub, &diag, &sup, &rhs);

        let coeffs = (0..n - 1)
            .map(|j| {
                let b = slope[j] - h[j] * (2.0 * m[j] + m[j + 1]) / 6.0;
                [values[j], b, 0.5 * m[j], (m[j + 1] - m[j]) / (6.0 * h[j])]
            })
            .collect();
        Ok(Self { mesh: mesh.clone(), coeffs })
    }

    #[must_use]
    pub fn eval(&self, z: f64) -> f64 {
        let j = self.mesh.segment_of(z);
        eval_local(&self.coeffs[j], z - self.mesh.nodes()[j])
    }

    #[must_use]
    pub fn coeffs(&self) -> &[[f64; 4]] {
        &self.coeffs
    }

    #[must_use]
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }
}

fn eval_local(c: &[f64; 4], t: f64) -> f64 {
    c[0] + t * (c[1] + t * (c[2] + t * c[3]))
}

/// Thomas algorithm; the systems built here are diagonally dominant.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Precomputed splines of `f, f^2, ..., f^max_power` on one mesh, plus the
/// constants needed by the error bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineTable {
    activation: Activation,
    mesh: Mesh,
    powers: Vec<Vec<[f64; 4]>>,
    fourth_sup: Vec<Option<f64>>,
    tail_gaps: Vec<(f64, f64)>,
}

/// Natural cubic splines of `activation^p`, `p = 1..=max_power`, on a uniform mesh.
pub fn build_spline_table(
    activation: Activation,
    a: f64,
    b: f64,
    n_points: usize,
    max_power: u32,
) -> Result<SplineTable> {
    SplineTable::build(activation, Mesh::uniform(a, b, n_points)?, max_power)
}

impl SplineTable {
    pub fn build(activation: Activation, mesh: Mesh, max_power: u32) -> Result<Self> {
        if !(1..=4).contains(&max_power) {
            return Err(Error::Config(format!("max_power must be 1..=4, got {max_power}")));
        }
        let mut powers = Vec::new();
        let mut fourth_sup = Vec::new();
        let mut tail_gaps = Vec::new();
        for p in 1..=max_power {
            let f = move |z: f64| activation.eval(z).powi(p as i32);
            let values: Vec<f64> = mesh.nodes().iter().map(|&z| f(z)).collect();
            let spline = CubicSpline::interpolate(&mesh, &values, EndCondition::Natural)?;
            powers.push(spline.coeffs);
            if p <= 2 {
                fourth_sup.push(
                    activation
                        .is_smooth()
                        .then(|| fourth_derivative_sup(f, mesh.a(), mesh.b(), DERIVATIVE_PROBES)),
                );
            }
            tail_gaps.push(tail_gap(activation, p, mesh.a(), mesh.b()));
        }
        Ok(Self {
            activation,
            mesh,
            powers,
            fourth_sup,
            tail_gaps,
        })
    }

    #[must_use]
    pub fn activation(&self) -> Activation {
        self.activation
    }

    #[must_use]
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    #[must_use]
    pub fn max_power(&self) -> u32 {
        self.powers.len() as u32
    }

    /// Segment coefficients of the spline for `f^p`.
    #[must_use]
    pub fn coeffs(&self, p: u32) -> &[[f64; 4]] {
        &self.powers[p as usize - 1]
    }

    /// The interpolant of `f^p` inside the mesh, the tail model outside it.
    #[must_use]
    pub fn eval(&self, p: u32, z: f64) -> f64 {
        if z < self.mesh.a() {
            let (c, d) = self.activation.left_tail().power(p);
            c * z.powi(d as i32)
        } else if z > self.mesh.b() {
            let (c, d) = self.activation.right_tail().power(p);
            c * z.powi(d as i32)
        } else {
            let j = self.mesh.segment_of(z);
            eval_local(&self.coeffs(p)[j], z - self.mesh.nodes()[j])
        }
    }

    /// Estimated `sup |(f^p)''''|` on the mesh, `None` when `f` is not smooth.
    #[must_use]
    pub fn fourth_derivative_sup(&self, p: u32) -> Option<f64> {
        self.fourth_sup.get(p as usize - 1).copied().flatten()
    }

    /// `sup |f^p - tail|` over the left and right tails.
    #[must_use]
    pub fn tail_gap(&self, p: u32) -> (f64, f64) {
        self.tail_gaps[p as usize - 1]
    }

    /// Serializes to the plain-text `spline-table v1` format.
    #[must_use]
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{TEXT_MAGIC}");
        let _ = writeln!(out, "activation {}", self.activation);
        let _ = writeln!(out, "max-power {}", self.max_power());
        let sups: Vec<String> = self
            .fourth_sup
            .iter()
            .map(|s| s.map_or_else(|| "none".to_string(), float))
            .collect();
        let _ = writeln!(out, "fourth-derivative-sup {}", sups.join(" "));
        for (p, (l, r)) in self.tail_gaps.iter().enumerate() {
            let _ = writeln!(out, "tail-gap {} {} {}", p + 1, float(*l), float(*r));
        }
        let _ = writeln!(out, "nodes {}", self.mesh.n_points());
        for z in self.mesh.nodes() {
            let _ = writeln!(out, "{}", float(*z));
        }
        for (p, rows) in self.powers.iter().enumerate() {
            let _ = writeln!(out, "power {}", p + 1);
            for c in rows {
                let _ = writeln!(
                    out,
                    "{} {} {} {}",
                    float(c[0]),
                    float(c[1]),
                    float(c[2]),
                    float(c[3])
                );
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |detail: String| Error::Parse {
            what: "spline table".into(),
            detail,
        };
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("bad number '{s}': {e}")));
        let mut lines = text.lines();
        let mut next = |what: &str| lines.next().ok_or_else(|| err(format!("missing {what}")));
        if next("header")?.trim() != TEXT_MAGIC {
            return Err(err("unrecognized header".into()));
        }
        let field = |line: &str, key: &str| -> Result<Vec<String>> {
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(err(format!("expected '{key}' line, got '{line}'")));
            }
            Ok(parts.map(str::to_string).collect())
        };
        let activation: Activation = field(next("activation")?, "activation")?
            .first()
            .ok_or_else(|| err("missing activation name".into()))?
            .parse()?;
        let max_power: u32 = field(next("max-power")?, "max-power")?
            .first()
            .and_then(|s| s.parse().ok())
            .filter(|p| (1..=4).contains(p))
            .ok_or_else(|| err("bad max-power".into()))?;
        let fourth_sup = field(next("fourth-derivative-sup")?, "fourth-derivative-sup")?
            .iter()
            .map(|s| if s == "none" { Ok(None) } else { num(s).map(Some) })
            .collect::<Result<Vec<_>>>()?;
        let mut tail_gaps = Vec::new();
        for p in 1..=max_power {
            let f = field(next("tail-gap")?, "tail-gap")?;
            if f.len() != 3 || f[0] != p.to_string() {
                return Err(err(format!("bad tail-gap line for power {p}")));
            }
            tail_gaps.push((num(&f[1])?, num(&f[2])?));
        }
        let n: usize = field(next("nodes")?, "nodes")?
            .first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("bad node count".into()))?;
        let nodes = (0..n)
            .map(|_| num(next("node")?.trim()))
            .collect::<Result<Vec<_>>>()?;
        let mesh = Mesh::from_nodes(nodes)?;
        let mut powers = Vec::new();
        for p in 1..=max_power {
            let f = field(next("power")?, "power")?;
            if f.first().map(String::as_str) != Some(p.to_string().as_str()) {
                return Err(err(format!("expected power {p}")));
            }
            let mut rows = Vec::with_capacity(n - 1);
            for _ in 0..n - 1 {
                let vals = next("coefficient row")?
                    .split_whitespace()
                    .map(num)
                    .collect::<Result<Vec<_>>>()?;
                let row: [f64; 4] = vals
                    .try_into()
                    .map_err(|_| err("coefficient rows need 4 values".into()))?;
                rows.push(row);
            }
            powers.push(rows);
        }
        Ok(Self {
            activation,
            mesh,
            powers,
            fourth_sup,
            tail_gaps,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Moments of `f(N(mu, var))` from the spline interpolants and analytic tails.
///
/// `order` is 2 (mean, variance) or 4 (adds skewness and kurtosis). A point
/// mass returns `f(mu)` exactly.
pub fn spline_moments(table: &SplineTable, mu: f64, var: f64, order: u32) -> Result<MomentSet> {
    check_variance(var)?;
    if !mu.is_finite() {
        return Err(Error::Domain(format!("mean must be finite, got {mu}")));
    }
    if order != 2 && order != 4 {
        return Err(Error::Config(format!("moment order must be 2 or 4, got {order}")));
    }
    if order > table.max_power() {
        return Err(Error::Config(format!(
            "order {order} needs a table with max_power {order}, have {}",
            table.max_power()
        )));
    }
    if var == 0.0 {
        return Ok(MomentSet::point(table.activation.eval(mu), order));
    }
    let s = (2.0 * var).sqrt();
    let nodes = table.mesh.nodes();
    let terms: Vec<NodeTerms> = nodes.iter().map(|&z| NodeTerms::new(z, mu, s)).collect();
    let np = order as usize;
    let mut raw = [0.0f64; 4];

    for (p, acc) in raw.iter_mut().enumerate().take(np) {
        let power = p as u32 + 1;
        let (lc, ld) = table.activation.left_tail().power(power);
        let (rc, rd) = table.activation.right_tail().power(power);
        *acc += tail_integral(lc, ld, &NodeTerms::NEG_INF, &terms[0], mu, s);
        *acc += tail_integral(rc, rd, &terms[terms.len() - 1], &NodeTerms::POS_INF, mu, s);
    }

    for j in 0..nodes.len() - 1 {
        let (lo, hi) = (&terms[j], &terms[j + 1]);
        let jm: [f64; 4] = integrals::j_terms(lo, hi);
        if jm.iter().all(|&v| v == 0.0) {
            continue;
        }
        let delta = mu - nodes[j];
        for (p, acc) in raw.iter_mut().enumerate().take(np) {
            let c = &table.powers[p][j];
            // Taylor expansion of the local cubic about mu, scaled to x.
            let e0 = c[0] + delta * (c[1] + delta * (c[2] + delta * c[3]));
            let e1 = s * (c[1] + delta * (2.0 * c[2] + 3.0 * c[3] * delta));
            let e2 = s * s * (c[2] + 3.0 * c[3] * delta);
            let e3 = s * s * s * c[3];
            *acc += e0 * jm[0] + e1 * jm[1] + e2 * jm[2] + e3 * jm[3];
        }
    }
    Ok(MomentSet::from_raw(&raw[..np]))
}

fn tail_integral(coeff: f64, degree: u32, lo: &NodeTerms, hi: &NodeTerms, mu: f64, s: f64) -> f64 {
    if coeff == 0.0 {
        return 0.0;
    }
    let mut c = [0.0; 5];
    c[degree as usize] = coeff;
    integrals::poly_integral(&c, 0.0, lo, hi, mu, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_at_nodes() {
        let t = build_spline_table(Activation::Tanh, -10.0, 10.0, 101, 2).unwrap();
        for &z in t.mesh().nodes() {
            assert!((t.eval(1, z) - z.tanh()).abs() < 1e-15);
            assert!((t.eval(2, z) - z.tanh().powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_mesh_is_exact() {
        let m = Mesh::uniform(-10.0, 10.0, 101).unwrap();
        let n = m.nodes();
        for j in 0..n.len() {
            assert_eq!(n[j], -n[n.len() - 1 - j]);
        }
        assert!((m.tau() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn clamped_spline_reproduces_cubic() {
        let mesh = Mesh::uniform(-3.0, 2.0, 9).unwrap();
        let f = |z: f64| z * z * z;
        let vals: Vec<f64> = mesh.nodes().iter().map(|&z| f(z)).collect();
        let sp = CubicSpline::interpolate(
            &mesh,
            &vals,
            EndCondition::Clamped { left_slope: 27.0, right_slope: 12.0 },
        )
        .unwrap();
        for k in 0..=200 {
            let z = -3.0 + 5.0 * k as f64 / 200.0;
            assert!((sp.eval(z) - f(z)).abs() < 1e-11, "z = {z}");
        }
    }

    #[test]
    fn text_round_trip() {
        let t = build_spline_table(Activation::Swish, -6.0, 6.0, 13, 4).unwrap();
        let back = SplineTable::from_text(&t.to_text()).unwrap();
        assert_eq!(back, t);
        let r = build_spline_table(Activation::Relu, -6.0, 6.0, 13, 2).unwrap();
        assert_eq!(SplineTable::from_text(&r.to_text()).unwrap(), r);
        assert!(SplineTable::from_text("spline-table v0\n").is_err());
    }

    #[test]
    fn point_mass_short_circuit() {
        let t = build_spline_table(Activation::Tanh, -10.0, 10.0, 101, 4).unwrap();
        let m = spline_moments(&t, 0.3, 0.0, 4).unwrap();
        assert_eq!(m.mean, 0.3f64.tanh());
        assert_eq!((m.variance, m.skewness, m.kurtosis), (0.0, Some(0.0), Some(3.0)));
        assert!(spline_moments(&t, 0.3, -1.0, 2).is_err());
        let small = build_spline_table(Activation::Tanh, -10.0, 10.0, 101, 2).unwrap();
        assert!(spline_moments(&small, 0.3, 1.0, 4).is_err());
    }

    #[test]
    fn odd_symmetry() {
        let t = build_spline_table(Activation::Tanh, -10.0, 10.0, 101, 4).unwrap();
        for mu in [0.25, 1.0, 3.0, 7.5] {
            let p = spline_moments(&t, mu, 0.7, 4).unwrap();
            let n = spline_moments(&t, -mu, 0.7, 4).unwrap();
            assert!((p.mean + n.mean).abs() < 1e-12);
            assert!((p.variance - n.variance).abs() < 1e-12);
        }
        let z = spline_moments(&t, 0.0, 0.7, 4).unwrap();
        assert!(z.mean.abs() < 1e-12 && z.skewness.unwrap().abs() < 1e-9);
    }

    #[test]
    fn relu_is_close() {
        let t = build_spline_table(Activation::Relu, -10.0, 10.0, 101, 2).unwrap();
        let (mu, v): (f64, f64) = (0.4, 0.9);
        let sd = v.sqrt();
        let a = mu / sd;
        let pdf = (-0.5 * a * a).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let cdf = 0.5 * libm::erfc(-a / std::f64::consts::SQRT_2);
        let mean = mu * cdf + sd * pdf;
        let second = (mu * mu + v) * cdf + mu * sd * pdf;
        let m = spline_moments(&t, mu, v, 2).unwrap();
        // The C2 spline rounds off the kink, so agreement is only to a few 1e-3.
        assert!((m.mean - mean).abs() < 5e-3, "{} vs {mean}", m.mean);
        assert!((m.variance - (second - mean * mean)).abs() < 5e-3);
    }
}

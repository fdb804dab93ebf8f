//! Moment errors of each engine against a Monte Carlo oracle on a `(mu, var)` grid.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::RngStream;
use crate::moments::{
    build_spline_table, mc_estimate, mean_error_bound, variance_error_bound, Activation, Engine,
    EngineKind, McEstimate, MomentSet,
};

use super::config::MomentsGridConfig;
use super::output::{cell, opt_cell, Table};

/// Spline variances below this make skewness and kurtosis meaningless.
pub const LOW_VARIANCE: f64 = 1e-6;

/// One engine at one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct GridRow {
    pub activation: Activation,
    pub mu: f64,
    pub var: f64,
    pub engine: EngineKind,
    pub estimate: MomentSet,
    pub oracle: MomentSet,
    pub mean_se: f64,
    pub variance_se: f64,
    /// Certified bounds, spline rows of smooth activations only.
    pub eps_mu: Option<f64>,
    pub eps_sigma: Option<f64>,
}

impl GridRow {
    #[must_use]
    pub fn mean_error(&self) -> f64 {
        (self.estimate.mean - self.oracle.mean).abs()
    }

    #[must_use]
    pub fn variance_error(&self) -> f64 {
        (self.estimate.variance - self.oracle.variance).abs()
    }

    /// Engine variance minus oracle variance.
    #[must_use]
    pub fn variance_bias(&self) -> f64 {
        self.estimate.variance - self.oracle.variance
    }

    #[must_use]
    pub fn low_variance(&self) -> bool {
        self.estimate.variance < LOW_VARIANCE
    }
}

/// Runs the grid for every configured activation. Grid point `i` of
/// activation `a` draws its oracle from substream `a * 2^20 + i` of `seed`.
pub fn run_moments_grid(cfg: &MomentsGridConfig, seed: u64) -> Result<Vec<GridRow>> {
    if cfg.mc_samples < 2 {
        return Err(Error::Config("the oracle needs at least 2 samples".into()));
    }
    let order = if cfg.higher_moments { 4 } else { 2 };
    let root = RngStream::new(seed);
    let mut rows = Vec::new();
    for (ai, &act) in cfg.activations.iter().enumerate() {
        let table = std::sync::Arc::new(build_spline_table(
            act,
            cfg.mesh.a,
            cfg.mesh.b,
            cfg.mesh.n_points,
            order,
        )?);
        let spline = Engine::Spline(table.clone());
        let points: Vec<(f64, f64)> = cfg
            .variances
            .iter()
            .flat_map(|&v| cfg.means().into_iter().map(move |m| (m, v)))
            .collect();
        let per_point = points
            .par_iter()
            .enumerate()
            .map(|(i, &(mu, var))| {
                let stream = root.substream(((ai as u64) << 20) + i as u64);
                let mc: McEstimate = mc_estimate(act, mu, var, cfg.mc_samples, &stream)?;
                let mut out = Vec::with_capacity(2);
                let certified = act.is_smooth();
                out.push(GridRow {
                    activation: act,
                    mu,
                    var,
                    engine: EngineKind::Spline,
                    estimate: spline.moments(act, mu, var, order, 0)?,
                    oracle: mc.moments,
                    mean_se: mc.mean_se,
                    variance_se: mc.variance_se,
                    eps_mu: if certified { Some(mean_error_bound(&table, mu, var)?) } else { None },
                    eps_sigma: if certified { Some(variance_error_bound(&table, mu, var)?) } else { None },
                });
                if act == Activation::Tanh {
                    out.push(GridRow {
                        engine: EngineKind::Analytic,
                        estimate: Engine::Analytic.moments(act, mu, var, 2, 0)?,
                        eps_mu: None,
                        eps_sigma: None,
                        ..out[0].clone()
                    });
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(per_point.into_iter().flatten());
    }
    Ok(rows)
}

/// CSV layout of [`run_moments_grid`].
#[must_use]
pub fn grid_table(rows: &[GridRow]) -> Table {
    let mut t = Table::new(&[
        "activation", "mu", "var", "engine", "mean", "variance", "mc_mean", "mc_variance",
        "mean_abs_err", "var_abs_err", "eps_mu", "eps_sigma", "mc_mean_se", "mc_var_se",
        "skewness", "kurtosis", "mc_skewness", "mc_kurtosis", "skew_abs_err", "kurt_abs_err",
        "low_variance",
    ]);
    for r in rows {
        let diff = |a: Option<f64>, b: Option<f64>| a.zip(b).map(|(x, y)| (x - y).abs());
        t.push(vec![
            r.activation.name().to_string(),
            cell(r.mu),
            cell(r.var),
            r.engine.name().to_string(),
            cell(r.estimate.mean),
            cell(r.estimate.variance),
            cell(r.oracle.mean),
            cell(r.oracle.variance),
            cell(r.mean_error()),
            cell(r.variance_error()),
            opt_cell(r.eps_mu),
            opt_cell(r.eps_sigma),
            cell(r.mean_se),
            cell(r.variance_se),
            opt_cell(r.estimate.skewness),
            opt_cell(r.estimate.kurtosis),
            opt_cell(r.oracle.skewness),
            opt_cell(r.oracle.kurtosis),
            opt_cell(diff(r.estimate.skewness, r.oracle.skewness)),
            opt_cell(diff(r.estimate.kurtosis, r.oracle.kurtosis)),
            u8::from(r.low_variance()).to_string(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probabilistic::MeshSpec;

    #[test]
    fn small_grid_rows() {
        let cfg = MomentsGridConfig {
            activations: vec![Activation::Tanh, Activation::Swish],
            mu_min: -1.0,
            mu_max: 1.0,
            mu_step: 1.0,
            variances: vec![0.5],
            mc_samples: 20_000,
            mesh: MeshSpec::default(),
            higher_moments: true,
        };
        let rows = run_moments_grid(&cfg, 4).unwrap();
        // tanh: spline + analytic per point, swish: spline only
        assert_eq!(rows.len(), 3 * 2 + 3);
        for r in rows.iter().filter(|r| r.engine == EngineKind::Spline) {
            assert!(r.mean_error() < 5.0 * r.mean_se + 1e-3);
        }
        let t = grid_table(&rows);
        assert_eq!(t.rows.len(), rows.len());
        assert_eq!(rows, run_moments_grid(&cfg, 4).unwrap());
    }
}

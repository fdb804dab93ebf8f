//! Mean and variance of tanh(N(mu, var)) from each engine, with the
//! spline engine's certified error bounds.

use std::sync::Arc;

use pesn::moments::{build_spline_table, mean_error_bound, mc_estimate, variance_error_bound};
use pesn::{Activation, Engine, RngStream};

fn main() -> pesn::Result<()> {
    let table = Arc::new(build_spline_table(Activation::Tanh, -10.0, 10.0, 101, 2)?);
    let spline = Engine::Spline(table.clone());
    println!("{:>5} {:>5} {:>12} {:>12} {:>12} {:>10} {:>10}", "mu", "var", "mc", "spline", "analytic", "eps_mu", "eps_sigma");
    for (mu, var) in [(0.0, 1.0), (0.5, 0.2), (3.0, 0.2), (-2.0, 2.0)] {
        let mc = mc_estimate(Activation::Tanh, mu, var, 1_000_000, &RngStream::new(1))?;
        let s = spline.moments(Activation::Tanh, mu, var, 2, 0)?;
        let a = Engine::Analytic.moments(Activation::Tanh, mu, var, 2, 0)?;
        println!(
            "{mu:>5} {var:>5} {:>12.7} {:>12.7} {:>12.7} {:>10.2e} {:>10.2e}",
            mc.moments.mean,
            s.mean,
            a.mean,
            mean_error_bound(&table, mu, var)?,
            variance_error_bound(&table, mu, var)?
        );
        println!("{:>11} {:>12.7} {:>12.7} {:>12.7}", "variance", mc.moments.variance, s.variance, a.variance);
    }

    // other activations only have the spline and Monte Carlo engines
    let swish = Engine::Spline(Arc::new(build_spline_table(Activation::Swish, -10.0, 10.0, 101, 4)?));
    let m = swish.moments(Activation::Swish, 0.5, 1.0, 4, 0)?;
    println!("swish(N(0.5, 1)): mean {:.5} var {:.5} skew {:.4?} kurt {:.4?}", m.mean, m.variance, m.skewness, m.kurtosis);
    Ok(())
}

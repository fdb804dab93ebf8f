//! Per-layer moment errors in a random tanh network.

use pesn::harness::config::{FfnnConfig, NetworkSpec};
use pesn::harness::ffnn_propagate;
use pesn::EngineKind;

fn main() -> pesn::Result<()> {
    let cfg = FfnnConfig { mc_samples: 20_000, ..FfnnConfig::default() };
    let net = NetworkSpec { name: "small".into(), hidden: vec![10; 4] };
    let r = ffnn_propagate(&cfg, &net, 2)?;
    let (s, a) = (r.errors(EngineKind::Spline), r.errors(EngineKind::Analytic));
    println!("layer  spline eps_mu/eps_sigma   analytic eps_mu/eps_sigma");
    for (x, y) in s.iter().zip(&a) {
        println!("{:>5}  {:.2e}/{:.2e}        {:.2e}/{:.2e}", x.layer, x.eps_mu, x.eps_sigma, y.eps_mu, y.eps_sigma);
    }
    Ok(())
}

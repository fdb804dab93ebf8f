//! Building, sizing and persisting spline tables.

use pesn::moments::{mean_error_bound, points_for_tolerance, Mesh, SplineTable};
use pesn::Activation;

fn main() -> pesn::Result<()> {
    for tol in [1e-3, 1e-5, 1e-7] {
        let n = points_for_tolerance(Activation::Tanh, -10.0, 10.0, tol)?;
        println!("tanh on [-10, 10]: {n} points for interpolation error <= {tol:e}");
    }
    let table = SplineTable::build(Activation::Sigmoid, Mesh::uniform(-12.0, 12.0, 121)?, 2)?;
    let path = std::env::temp_dir().join("sigmoid.table");
    table.save(&path)?;
    let back = SplineTable::load(&path)?;
    println!("reloaded {} table with {} nodes from {}", back.activation(), back.mesh().n_points(), path.display());
    println!("bound at mu = 1, var = 0.5: {:.3e}", mean_error_bound(&back, 1.0, 0.5)?);
    Ok(())
}

//! Simulating the cart-pole and writing the identification dataset.

use pesn::cartpole::{energy, make_dataset, DataSpec, INPUT_NAMES, TARGET_NAMES};

fn main() -> pesn::Result<()> {
    let spec = DataSpec::default();
    let data = make_dataset(&spec, 11)?;
    let d = &data.dataset;
    println!("{} rows, inputs {:?}, targets {:?}", d.len(), INPUT_NAMES, TARGET_NAMES);
    for (j, name) in INPUT_NAMES.iter().enumerate() {
        let col = d.inputs().iter().map(|r| r[j]);
        let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        println!("{name:>6}: [{lo:8.3}, {hi:8.3}]");
    }
    let e0 = energy(&data.trajectory.states[0], &spec.physics);
    println!("initial energy {e0:.4} J");
    let path = std::env::temp_dir().join("cartpole.csv");
    d.save_csv(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

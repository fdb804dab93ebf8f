//! A deterministic echo state network learning a delayed sine, with batch
//! and recursive least squares readouts.

use pesn::reservoir::{
    esn_predict, init_reservoir, train_batch, Dataset, EsnParams, InputMap, PredictionMode, Rls,
    RolloutSpec, Split,
};
use pesn::RngStream;

fn main() -> pesn::Result<()> {
    let n: usize = 900;
    let u: Vec<f64> = (0..n).map(|k| (0.1 * k as f64).sin() + 0.3 * (0.037 * k as f64).cos()).collect();
    let inputs: Vec<Vec<f64>> = u.iter().map(|&v| vec![v]).collect();
    let targets: Vec<Vec<f64>> = (0..n).map(|k| vec![u[k.saturating_sub(3)]]).collect();
    let data = Dataset::new(inputs, targets, Split { washout: 100, train: 600, test: 200 })?;

    let params = EsnParams { reservoir_size: 80, feedback_scale: 0.0, ..EsnParams::default() };
    let w = init_reservoir(&params, (1, 1), &RngStream::new(3))?;
    let readout = train_batch(&w, &params, &data, &vec![0.0; 80], None)?;
    let rmse = (readout.residuals.iter().map(|r| r * r).sum::<f64>() / 600.0).sqrt();
    println!("batch train rmse {rmse:.2e}");

    // the same fit, one sample at a time
    let mut rls = Rls::new(w.regressor_dim(), 1e6, 1.0)?;
    let mut w_rls = nalgebra::DMatrix::zeros(1, w.regressor_dim());
    for (k, h) in readout.regressors.row_iter().enumerate() {
        let b: Vec<f64> = h.iter().copied().collect();
        rls.update(&mut w_rls, &b, data.target(100 + k))?;
    }
    println!("max |W_rls - W_batch| = {:.2e}", (&w_rls - &readout.w_out).abs().max());

    let w = w.with_readout(readout.w_out)?;
    let spec = RolloutSpec::new(700 - 50, 50, 100, PredictionMode::Single);
    let p = esn_predict(&w, &params, &data, &vec![0.0; 80], &spec, &InputMap::open_loop(1, 1), None)?;
    println!("single-step test error {:.2e}", p.mean_abs_error()[0]);
    Ok(())
}

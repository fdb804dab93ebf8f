//! Experiment drivers. Each returns structured rows and can render them as a
//! CSV [`Table`]; the `pesn-bench` binary writes those tables to disk.

pub mod config;
pub mod entropy;
pub mod ffnn;
pub mod grid;
pub mod model_learning;
pub mod output;
pub mod timing;
pub mod washout;

pub use config::{ExperimentConfig, HistogramSpec};
pub use entropy::shannon_entropy;
pub use ffnn::{ffnn_propagate, FfnnResult, LayerError};
pub use grid::{run_moments_grid, GridRow};
pub use model_learning::{run_model_learning, BandRow, ModelLearningResult};
pub use output::{write_table, Metadata, Table};
pub use timing::{run_timing_bench, TimingResult};
pub use washout::{
    run_entropy_experiment, run_washout_experiment, washout_runs, EntropyRow, WashoutRow, WashoutRuns,
};

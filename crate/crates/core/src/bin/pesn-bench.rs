//! Command-line driver for the experiments in `pesn::harness`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pesn::cartpole::{input_map, make_dataset, TARGET_NAMES};
use pesn::harness::model_learning::band_table;
use pesn::harness::output::{cell, write_meta, write_table, Metadata, Table};
use pesn::harness::washout::{entropy_table, washout_table};
use pesn::harness::{
    ffnn_propagate, grid::grid_table, run_model_learning, run_moments_grid, run_timing_bench,
    washout_runs, ExperimentConfig,
};
use pesn::probabilistic::{pesn_predict, pesn_train};
use pesn::reservoir::{Dataset, EsnWeights, PredictionMode, RolloutSpec};
use pesn::{EngineKind, Error, Result, RngStream};

#[derive(Parser, Debug)]
#[command(name = "pesn-bench", version, about = "Moment propagation and probabilistic reservoir experiments")]
struct Cli {
    /// TOML configuration; omitted sections keep their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides both `seed` and `seeds` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: `output_dir` from the config).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Moment engine for the probabilistic network.
    #[arg(long, global = true, value_enum)]
    engine: Option<EngineArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EngineArg {
    Analytic,
    Spline,
    Mc,
}

impl From<EngineArg> for EngineKind {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Analytic => Self::Analytic,
            EngineArg::Spline => Self::Spline,
            EngineArg::Mc => Self::Mc,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Single,
    Multi,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Engine moment errors against Monte Carlo on a (mu, var) grid.
    ///
    /// Writes moments_grid.csv with columns: activation, mu, var, engine,
    /// mean, variance, mc_mean, mc_variance, mean_abs_err, var_abs_err,
    /// eps_mu, eps_sigma (certified bounds, spline rows only), mc_mean_se,
    /// mc_var_se, skewness, kurtosis, mc_skewness, mc_kurtosis,
    /// skew_abs_err, kurt_abs_err, low_variance (1 when the spline variance
    /// is below 1e-6).
    MomentsGrid,
    /// Median wall time of one element-wise moment pass per reservoir size.
    ///
    /// Writes bench_time.csv with columns: method, size, median_seconds.
    /// Table construction time, the mesh-doubling ratio and linear-fit R^2
    /// values go to bench_time.meta.json. Timings are not reproducible.
    BenchTime,
    /// Prediction error after each washout length, PESN against a deterministic ensemble.
    ///
    /// Writes washout_seed<S>.csv per master seed with columns: washout,
    /// dim, pesn_mean, pesn_min, pesn_max (over rollout steps), mc_mean,
    /// mc_min, mc_max (over trials of per-trial mean absolute error).
    Washout,
    /// Entropy of reservoir values during the washout.
    ///
    /// Writes entropy_seed<S>.csv per master seed with columns: washout,
    /// pesn (pooled hidden means), mc_mean, mc_min, mc_max (over trials).
    Entropy,
    /// Belief propagation through random tanh networks.
    ///
    /// Writes ffnn_<name>.csv (network, layer, width, engine, eps_mu,
    /// eps_sigma) and ffnn_<name>_cdf.csv (x, mc, spline, analytic) per
    /// configured network.
    Ffnn,
    /// Single- and multi-step cart-pole prediction with noisy state inputs.
    ///
    /// Writes model_learning_{single,multi}_seed<S>.csv with columns: step,
    /// dim, truth, pesn_mean, pesn_2sd, mc_mean, mc_2sd.
    ModelLearning,
    /// Simulates the cart-pole and writes dataset.csv (columns z0.., y0..).
    MakeData,
    /// Trains the reservoir readout and writes weights.json.
    Train {
        /// Dataset CSV; generated from the config and seed when omitted.
        #[arg(long, value_name = "PATH")]
        data: Option<PathBuf>,
    },
    /// Runs a probabilistic rollout from saved weights.
    ///
    /// Writes predictions.csv with columns: step, row, then mean_<dim>,
    /// var_<dim>, truth_<dim> for each output.
    Predict {
        #[arg(long, value_name = "PATH")]
        weights: PathBuf,
        /// Dataset CSV; generated from the config and seed when omitted.
        #[arg(long, value_name = "PATH")]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "multi")]
        mode: ModeArg,
        /// Prediction steps (default: model_learning.multi_horizon).
        #[arg(long)]
        horizon: Option<usize>,
    },
}

struct Context {
    cfg: ExperimentConfig,
    hash: String,
    out: PathBuf,
}

impl Context {
    fn meta(&self, experiment: &str, seed: u64) -> Metadata {
        Metadata::new(experiment, &self.hash, seed)
    }

    fn write(&self, stem: &str, table: &Table, meta: &Metadata) -> Result<()> {
        let p = write_table(&self.out, stem, table, meta)?;
        println!("{}", p.display());
        Ok(())
    }

    fn dataset(&self, path: Option<&Path>, seed: u64) -> Result<Dataset> {
        match path {
            Some(p) => Dataset::load_csv(p, Some(self.cfg.data.split())),
            None => Ok(make_dataset(&self.cfg.data, seed)?.dataset),
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
        cfg.seeds = vec![s];
    }
    if let Some(o) = &cli.out {
        cfg.output_dir.clone_from(o);
    }
    if let Some(e) = cli.engine {
        cfg.pesn.engine = e.into();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let ctx = Context { hash: cfg.hash()?, out: cfg.output_dir.clone(), cfg };
    let cfg = &ctx.cfg;
    match &cli.command {
        Command::MomentsGrid => {
            let rows = run_moments_grid(&cfg.moments, cfg.seed)?;
            ctx.write("moments_grid", &grid_table(&rows), &ctx.meta("moments-grid", cfg.seed))?;
        }
        Command::BenchTime => {
            let r = run_timing_bench(&cfg.timing, cfg.seed)?;
            let r2: Vec<(String, f64)> = r.methods().into_iter().map(|m| (m.clone(), r.linear_r2(&m))).collect();
            let meta = ctx
                .meta("bench-time", cfg.seed)
                .with_note("table_build_seconds", r.table_build_seconds)
                .with_note("doubling_ratio", r.doubling_ratio)
                .with_note("linear_r2", r2);
            ctx.write("bench_time", &r.to_table(), &meta)?;
        }
        Command::Washout => {
            for s in cfg.master_seeds() {
                let rows = washout_runs(cfg, s)?.washout_rows();
                ctx.write(&format!("washout_seed{s}"), &washout_table(&rows), &ctx.meta("washout", s))?;
            }
        }
        Command::Entropy => {
            for s in cfg.master_seeds() {
                let rows = washout_runs(cfg, s)?.entropy_rows(&cfg.washout.histogram)?;
                let meta = ctx.meta("entropy", s).with_note("histogram", &cfg.washout.histogram);
                ctx.write(&format!("entropy_seed{s}"), &entropy_table(&rows), &meta)?;
            }
        }
        Command::Ffnn => {
            for net in &cfg.ffnn.networks {
                let r = ffnn_propagate(&cfg.ffnn, net, cfg.seed)?;
                let meta = ctx.meta("ffnn", cfg.seed).with_note("network", &net.name);
                ctx.write(&format!("ffnn_{}", net.name), &r.to_table(), &meta)?;
                ctx.write(&format!("ffnn_{}_cdf", net.name), &r.cdf_table(), &meta)?;
            }
        }
        Command::ModelLearning => {
            for s in cfg.master_seeds() {
                let r = run_model_learning(cfg, s)?;
                let meta = ctx.meta("model-learning", s);
                ctx.write(&format!("model_learning_single_seed{s}"), &band_table(&r.single), &meta)?;
                ctx.write(&format!("model_learning_multi_seed{s}"), &band_table(&r.multi), &meta)?;
            }
        }
        Command::MakeData => {
            let data = make_dataset(&cfg.data, cfg.seed)?.dataset;
            std::fs::create_dir_all(&ctx.out).map_err(|e| Error::Io { path: ctx.out.clone(), source: e })?;
            let p = ctx.out.join("dataset.csv");
            data.save_csv(&p)?;
            let split = data.split();
            let meta = ctx
                .meta("make-data", cfg.seed)
                .with_note("split", [split.washout, split.train, split.test]);
            write_meta(&ctx.out, "dataset", &meta)?;
            println!("{}", p.display());
        }
        Command::Train { data } => {
            let data = ctx.dataset(data.as_deref(), cfg.seed)?;
            let rng = RngStream::new(cfg.seed).substream(0);
            let (w, readout) = pesn_train(&cfg.pesn, (data.input_dim(), data.output_dim()), &data, &rng)?;
            std::fs::create_dir_all(&ctx.out).map_err(|e| Error::Io { path: ctx.out.clone(), source: e })?;
            let p = ctx.out.join("weights.json");
            w.save(&cfg.pesn.esn, &p)?;
            let n = readout.residuals.len().max(1) as f64;
            let rmse = (readout.residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
            write_meta(&ctx.out, "weights", &ctx.meta("train", cfg.seed).with_note("train_rmse", rmse))?;
            println!("{}", p.display());
        }
        Command::Predict { weights, data, mode, horizon } => {
            let (w, params) = EsnWeights::load(weights)?;
            let mut pcfg = cfg.pesn.clone();
            pcfg.esn = params;
            let data = ctx.dataset(data.as_deref(), cfg.seed)?;
            let mode = match mode {
                ModeArg::Single => PredictionMode::Single,
                ModeArg::Multi => PredictionMode::Multi,
            };
            let horizon = horizon.unwrap_or(cfg.model_learning.multi_horizon);
            let spec = RolloutSpec::new(data.split().test_start(), pcfg.esn.washout, horizon, mode);
            let master = RngStream::new(cfg.seed);
            let engine = pcfg.engine(&master.substream(1))?;
            let initial = pcfg.predict_initial.build(w.reservoir_size(), &master.substream(3))?;
            let map = input_map(&cfg.data.physics);
            let p = pesn_predict(&w, &pcfg, &engine, &data, &spec, &map, &initial)?;
            let names: Vec<String> = (0..data.output_dim())
                .map(|j| TARGET_NAMES.get(j).map_or(format!("y{j}"), |s| s.to_string()))
                .collect();
            let mut header = vec!["step".to_string(), "row".to_string()];
            for n in &names {
                header.extend([format!("mean_{n}"), format!("var_{n}"), format!("truth_{n}")]);
            }
            let mut t = Table::new(&header);
            for (k, (b, y)) in p.outputs.iter().zip(&p.targets).enumerate() {
                let mut row = vec![k.to_string(), (p.first_row + k).to_string()];
                for j in 0..names.len() {
                    row.extend([cell(b.mean()[j]), cell(b.variance()[j]), cell(y[j])]);
                }
                t.push(row);
            }
            let meta = ctx.meta("predict", cfg.seed).with_note("engine", pcfg.engine.name());
            ctx.write("predictions", &t, &meta)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}

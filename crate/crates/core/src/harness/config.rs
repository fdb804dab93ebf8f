//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cartpole::DataSpec;
use crate::error::{Error, Result};
use crate::moments::Activation;
use crate::probabilistic::{MeshSpec, PesnConfig};

/// Histogram used for entropy estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistogramSpec {
    pub bins: usize,
    pub lo: f64,
    pub hi: f64,
    /// Logarithm base; 2 gives bits.
    pub base: f64,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        Self { bins: 100, lo: -2.0, hi: 2.0, base: 2.0 }
    }
}

impl HistogramSpec {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::Config("histogram needs at least 2 bins".into()));
        }
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Config("histogram range needs finite lo < hi".into()));
        }
        if !(self.base > 1.0) {
            return Err(Error::Config("entropy log base must exceed 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsGridConfig {
    pub activations: Vec<Activation>,
    pub mu_min: f64,
    pub mu_max: f64,
    pub mu_step: f64,
    pub variances: Vec<f64>,
    /// Monte Carlo oracle samples per grid point.
    pub mc_samples: usize,
    pub mesh: MeshSpec,
    /// Also report skewness and kurtosis.
    pub higher_moments: bool,
}

impl Default for MomentsGridConfig {
    fn default() -> Self {
        Self {
            activations: vec![Activation::Tanh],
            mu_min: -5.0,
            mu_max: 5.0,
            mu_step: 0.5,
            variances: vec![0.2, 1.0],
            mc_samples: 10_000_000,
            mesh: MeshSpec::default(),
            higher_moments: true,
        }
    }
}

impl MomentsGridConfig {
    /// Grid means, `mu_min` to `mu_max` inclusive.
    #[must_use]
    pub fn means(&self) -> Vec<f64> {
        let n = ((self.mu_max - self.mu_min) / self.mu_step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.mu_min + i as f64 * self.mu_step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub mc_samples: usize,
    pub mesh: MeshSpec,
    /// Also time a mesh with twice the points.
    pub doubled_mesh: bool,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            sizes: vec![100, 300, 1000, 3000, 10_000],
            repeats: 30,
            mc_samples: 10_000,
            mesh: MeshSpec::default(),
            doubled_mesh: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WashoutConfig {
    pub lengths: Vec<usize>,
    pub trials: usize,
    pub horizon: usize,
    pub histogram: HistogramSpec,
}

impl Default for WashoutConfig {
    fn default() -> Self {
        Self {
            lengths: vec![1, 10, 20, 30, 40, 50, 100, 200],
            trials: 50,
            horizon: 10,
            histogram: HistogramSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub name: String,
    /// Hidden layer widths; the output layer has one linear unit.
    pub hidden: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FfnnConfig {
    pub input_dim: usize,
    pub input_mean: f64,
    pub input_variance: f64,
    pub networks: Vec<NetworkSpec>,
    pub mc_samples: usize,
    /// Scale weights by `1/sqrt(fan_in)`.
    pub scaled_weights: bool,
    pub mesh: MeshSpec,
    /// Points in the output CDF table.
    pub cdf_points: usize,
}

impl Default for FfnnConfig {
    fn default() -> Self {
        Self {
            input_dim: 1024,
            input_mean: -0.5,
            input_variance: 0.01,
            networks: vec![
                NetworkSpec { name: "shallow".into(), hidden: vec![5; 5] },
                NetworkSpec { name: "deep".into(), hidden: vec![50; 10] },
            ],
            mc_samples: 50_000,
            scaled_weights: true,
            mesh: MeshSpec::default(),
            cdf_points: 201,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelLearningConfig {
    pub trials: usize,
    pub multi_horizon: usize,
    pub single_steps: usize,
    /// Standard deviation of the noise added to the state inputs.
    pub state_noise_std: f64,
}

impl Default for ModelLearningConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            multi_horizon: 20,
            single_steps: 100,
            state_noise_std: 0.01,
        }
    }
}

/// Settings for every experiment; each subcommand reads its own section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Master seeds for the multi-seed experiments; empty means `[seed]`.
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub moments: MomentsGridConfig,
    pub timing: TimingConfig,
    pub data: DataSpec,
    pub pesn: PesnConfig,
    pub washout: WashoutConfig,
    pub ffnn: FfnnConfig,
    pub model_learning: ModelLearningConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            seeds: Vec::new(),
            output_dir: PathBuf::from("results"),
            moments: MomentsGridConfig::default(),
            timing: TimingConfig::default(),
            data: DataSpec::default(),
            pesn: PesnConfig::default(),
            washout: WashoutConfig::default(),
            ffnn: FfnnConfig::default(),
            model_learning: ModelLearningConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Seeds for multi-seed experiments.
    #[must_use]
    pub fn master_seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.seeds.clone()
        }
    }

    /// SHA-256 of the configuration, ignoring the output directory.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        Ok(hex::encode(Sha256::digest(c.to_toml()?.as_bytes())))
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.moments;
        if m.activations.is_empty() || m.variances.is_empty() {
            return Err(Error::Config("moment grid needs activations and variances".into()));
        }
        if !(m.mu_step > 0.0) || m.mu_max < m.mu_min {
            return Err(Error::Config("moment grid needs mu_step > 0 and mu_min <= mu_max".into()));
        }
        if m.variances.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Config("grid variances must be >= 0".into()));
        }
        if m.mc_samples < 2 {
            return Err(Error::Config("moment grid needs at least 2 Monte Carlo samples".into()));
        }
        let t = &self.timing;
        if t.sizes.is_empty() || t.repeats == 0 || t.mc_samples < 2 {
            return Err(Error::Config("timing needs sizes, repeats >= 1 and mc_samples >= 2".into()));
        }
        let w = &self.washout;
        if w.lengths.is_empty() || w.lengths.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Config("washout lengths must be non-empty and strictly ascending".into()));
        }
        if w.trials == 0 || w.horizon == 0 {
            return Err(Error::Config("washout needs trials >= 1 and horizon >= 1".into()));
        }
        w.histogram.validate()?;
        let f = &self.ffnn;
        if f.input_dim == 0 || f.mc_samples < 2 || !(f.input_variance >= 0.0) {
            return Err(Error::Config("ffnn needs input_dim >= 1, mc_samples >= 2, variance >= 0".into()));
        }
        if f.networks.iter().any(|n| n.hidden.is_empty() || n.hidden.contains(&0)) {
            return Err(Error::Config("ffnn hidden widths must be non-empty and positive".into()));
        }
        let ml = &self.model_learning;
        if ml.trials < 2 || ml.multi_horizon == 0 || !(ml.state_noise_std >= 0.0) {
            return Err(Error::Config("model learning needs trials >= 2, horizon >= 1, noise >= 0".into()));
        }
        self.pesn.esn.validate()?;
        self.data.physics.validate()?;
        if self.data.train == 0 {
            return Err(Error::Config("data.train must be positive".into()));
        }
        Ok(())
    }
}

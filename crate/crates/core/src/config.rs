use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{GpacError, Result};

/// How the hard assignment matrix V is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// K-means++ seeding followed by nearest-seed assignment.
    Kmeanspp,
    /// Uniformly random labels.
    Random,
    /// Every sample in cluster 0.
    Zero,
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMode::Kmeanspp => "kmeanspp",
            InitMode::Random => "random",
            InitMode::Zero => "zero",
        })
    }
}

impl FromStr for InitMode {
    type Err = GpacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeanspp" | "kmeans++" => Ok(InitMode::Kmeanspp),
            "random" => Ok(InitMode::Random),
            "zero" => Ok(InitMode::Zero),
            other => Err(GpacError::InvalidConfig(format!("unknown init mode {other:?}"))),
        }
    }
}

/// Rule for refreshing a sample's hard label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HardUpdate {
    /// Argmin of the hard clustering score.
    Score,
    /// Ablation: V tracks argmax of the fuzzy row instead of its own score.
    ArgmaxFuzzy,
}

/// Smallest accepted fuzzy exponent unless `allow_extreme_m` is set; keeps
/// `1/(m-1)` at or below 64.
pub const MIN_SAFE_M: f64 = 1.0 + 1.0 / 64.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpacConfig {
    /// Number of clusters c.
    pub clusters: usize,
    /// Fuzzy weighting exponent, > 1.
    pub m: f64,
    /// Weight of the neighborhood vote term.
    pub alpha: f64,
    /// Final weight of the local consistency projection.
    pub beta_max: f64,
    /// Epochs over which beta rises linearly from 0 to `beta_max`.
    pub beta_ramp_epochs: usize,
    /// Neighbors per sample in the k-NN graph.
    pub k: usize,
    /// Random-walk expansion depth; derived from n, c and k when absent.
    pub theta: Option<usize>,
    /// Gaussian kernel bandwidth; estimated from the data when absent.
    pub sigma: Option<f64>,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop once the fraction of changed hard labels in an epoch falls below this.
    pub convergence_tol: f64,
    pub seed: u64,
    pub init: InitMode,
    pub hard_update: HardUpdate,
    /// Accept `m` below [`MIN_SAFE_M`].
    pub allow_extreme_m: bool,
}

impl Default for GpacConfig {
    fn default() -> Self {
        GpacConfig {
            clusters: 2,
            m: 1.05,
            alpha: 1.0,
            beta_max: 1.0,
            beta_ramp_epochs: 10,
            k: 10,
            theta: None,
            sigma: None,
            batch_size: 1024,
            max_epochs: 100,
            convergence_tol: 1e-3,
            seed: 0,
            init: InitMode::Kmeanspp,
            hard_update: HardUpdate::Score,
            allow_extreme_m: false,
        }
    }
}

impl GpacConfig {
    /// Defaults for `clusters` clusters.
    pub fn new(clusters: usize) -> Self {
        GpacConfig {
            clusters,
            ..Default::default()
        }
    }

    /// Beta for a zero-based epoch index under the linear ramp.
    pub fn beta_at(&self, epoch: usize) -> f64 {
        if self.beta_ramp_epochs == 0 {
            self.beta_max
        } else {
            self.beta_max * (epoch as f64 / self.beta_ramp_epochs as f64).min(1.0)
        }
    }
}

/// Checks a configuration against a dataset and returns a copy with the
/// batch size clamped to n.
pub fn validate_config(config: &GpacConfig, data: &Dataset) -> Result<GpacConfig> {
    let n = data.n();
    let bad = |msg: String| Err(GpacError::InvalidConfig(msg));
    if !(config.m > 1.0) || !config.m.is_finite() {
        return bad(format!(
            "fuzzy exponent m must exceed 1 (exponent -1/(m-1) undefined), got {}",
            config.m
        ));
    }
    if config.m < MIN_SAFE_M && !config.allow_extreme_m {
        return bad(format!(
            "fuzzy exponent m={} is below {MIN_SAFE_M}; set allow_extreme_m to override",
            config.m
        ));
    }
    if config.clusters < 2 || config.clusters > n {
        return bad(format!(
            "cluster count must lie in [2, {n}], got {}",
            config.clusters
        ));
    }
    if config.k < 1 || config.k >= n {
        return bad(format!(
            "neighbor count k must lie in [1, n) = [1, {n}), got {}",
            config.k
        ));
    }
    if config.batch_size < 1 {
        return bad("batch size must be at least 1".into());
    }
    if !(config.alpha >= 0.0) || !config.alpha.is_finite() {
        return bad(format!("alpha must be finite and >= 0, got {}", config.alpha));
    }
    if !(config.beta_max >= 0.0) || !config.beta_max.is_finite() {
        return bad(format!(
            "beta_max must be finite and >= 0, got {}",
            config.beta_max
        ));
    }
    if !(0.0..=1.0).contains(&config.convergence_tol) {
        return bad(format!(
            "convergence tolerance must lie in [0, 1], got {}",
            config.convergence_tol
        ));
    }
    if config.theta == Some(0) {
        return bad("theta must be at least 1".into());
    }
    if let Some(s) = config.sigma {
        if !(s > 0.0) || !s.is_finite() {
            return bad(format!("sigma must be positive, got {s}"));
        }
    }
    let mut out = config.clone();
    out.batch_size = out.batch_size.min(n);
    Ok(out)
}

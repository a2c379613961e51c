//! Flags and config-file keys. Every flag can also be set in a TOML file
//! passed with `--config`; flags win.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Seed used when neither `--seed` nor the config file sets one.
pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Args, Deserialize, Serialize, Debug, Clone, Default, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Params {
    /// Master seed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Number of independent trials.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// TOML file with default values for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Emit a JSON summary instead of CSV.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<bool>,

    /// Estimator: plain, stratified, median, cv, frolov.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub est: Option<String>,
    /// Inner estimator of `median`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner: Option<String>,
    /// Sample count (plain, frolov) or budget (counterexample suite).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    /// Cells per axis (stratified).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    /// Number of median runs (odd).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    /// Grid intervals per axis of the control-variate interpolant.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_grid: Option<u64>,
    /// Residual samples of the control-variate estimator.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_mc: Option<u64>,
    /// Test function descriptor, e.g. `holder:beta=1,d=1`.
    #[arg(long = "fn")]
    #[serde(rename = "fn", skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,

    /// Error level.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Target failure probability.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Inner failure probability (median suite).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Hölder exponent (strat-holder suite).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Integrability exponent (strat-w1p suite).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Largest k scanned by verify-lemmas.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<u64>,
    /// Comma-separated budgets.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<u64>>,
    /// Repetitions per budget in a sweep.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<u64>,
    /// Sweep statistic: median, rmse, failure-rate.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistic: Option<String>,
    /// verify-bounds suite: strat-holder, strat-w1p, median, bakhvalov, counterexample.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        Params { $($field: $top.$field.or($base.$field),)* }
    };
}

impl Params {
    /// Fields set in `self` override those in `base`.
    pub fn over(self, base: Params) -> Params {
        overlay!(
            base, self, seed, trials, out, threads, config, json, est, inner, n, m, k, m_grid, n_mc, function, epsilon,
            delta, alpha, beta, p, k_max, ns, reps, statistic, suite
        )
    }

    /// Merges the config file named by `--config`, if any.
    pub fn resolve(self) -> Result<Params, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::Runtime(format!("cannot read config {}: {e}", path.display())))?;
        let file: Params =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        Ok(self.over(file))
    }

    pub fn seed_or_default(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn json(&self) -> bool {
        self.json.unwrap_or(false)
    }
}

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

/// Values accepted in a `--config` TOML file. Every field is optional and
/// is overridden by the matching flag.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub log_level: Option<String>,
    pub steps: Option<usize>,
    pub guidance: Option<f64>,
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
    pub train_steps: Option<usize>,
    pub test_fraction: Option<f64>,
    pub test_per_class: Option<usize>,
    pub rephrase_url: Option<String>,
    pub policy: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text)
            .map_err(|e| crate::ValidationError(format!("{}: {e}", path.display())).into())
    }
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_OUT: &str = "tunecap_out";

/// Flag value, else file value, else default.
pub fn pick<T: Clone>(flag: Option<T>, file: &Option<T>, default: T) -> T {
    flag.or_else(|| file.clone()).unwrap_or(default)
}

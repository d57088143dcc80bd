//! Runtime configuration, read from a JSON file.
//!
//! Every key is optional; unknown keys are rejected. Example:
//!
//! ```json
//! {
//!   "seed": 7,
//!   "vectorizer": { "k_max": 6, "tau_mse": 16.0, "tau_color": 12.0, "simplicity_threshold": 0.98 },
//!   "metrics": { "r_com": false },
//!   "buckets": { "buckets": [{ "id": "square", "width": 512, "height": 512 }] }
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::buckets::BucketTable;
use crate::metrics::MetricToggles;
use crate::vector::palette::{K_MAX, TAU_MSE};
use crate::vector::simplicity::{SimplicityParams, SIMPLICITY_THRESHOLD, TAU_COLOR};

/// Environment variable naming a config file when `--config` is absent.
pub const CONFIG_ENV: &str = "LAYERFORGE_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config value out of range: {0}")]
    Range(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VectorizerConfig {
    pub k_max: usize,
    pub tau_mse: f64,
    pub tau_color: f64,
    pub simplicity_threshold: f64,
}

impl Default for VectorizerConfig {
    fn default() -> Self {
        Self { k_max: K_MAX, tau_mse: TAU_MSE, tau_color: TAU_COLOR, simplicity_threshold: SIMPLICITY_THRESHOLD }
    }
}

impl VectorizerConfig {
    pub fn simplicity(&self) -> SimplicityParams {
        SimplicityParams { k_max: self.k_max, tau_color: self.tau_color, threshold: self.simplicity_threshold }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub vectorizer: VectorizerConfig,
    pub metrics: MetricToggles,
    pub buckets: BucketTable,
}

impl Config {
    pub fn from_json(s: &str) -> Result<Self, ConfigError> {
        let c: Config = serde_json::from_str(s)?;
        c.check()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let s = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_json(&s)
    }

    /// `explicit`, else the file named by [`CONFIG_ENV`], else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    fn check(&self) -> Result<(), ConfigError> {
        let v = &self.vectorizer;
        if !(1..=64).contains(&v.k_max) {
            return Err(ConfigError::Range(format!("vectorizer.k_max = {} (expected 1..=64)", v.k_max)));
        }
        if !(v.tau_mse.is_finite() && v.tau_mse >= 0.0) {
            return Err(ConfigError::Range(format!("vectorizer.tau_mse = {} (expected >= 0)", v.tau_mse)));
        }
        if !(v.tau_color.is_finite() && (0.0..=442.0).contains(&v.tau_color)) {
            return Err(ConfigError::Range(format!("vectorizer.tau_color = {} (expected 0..=442)", v.tau_color)));
        }
        if !(0.0..=1.0).contains(&v.simplicity_threshold) {
            return Err(ConfigError::Range(format!(
                "vectorizer.simplicity_threshold = {} (expected 0..=1)",
                v.simplicity_threshold
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        assert_eq!(Config::from_json("{}").unwrap(), Config::default());
    }

    #[test]
    fn partial_sections() {
        let c = Config::from_json(r#"{"seed": 3, "vectorizer": {"k_max": 4}, "metrics": {"r_com": false}}"#).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.vectorizer.k_max, 4);
        assert_eq!(c.vectorizer.tau_color, TAU_COLOR);
        assert!(!c.metrics.r_com && c.metrics.r_ali);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::from_json(r#"{"sed": 3}"#).is_err());
        assert!(Config::from_json(r#"{"vectorizer": {"k": 3}}"#).is_err());
    }

    #[test]
    fn ranges_checked() {
        assert!(matches!(Config::from_json(r#"{"vectorizer": {"k_max": 0}}"#), Err(ConfigError::Range(_))));
        assert!(matches!(Config::from_json(r#"{"vectorizer": {"simplicity_threshold": 1.5}}"#), Err(ConfigError::Range(_))));
        assert!(Config::from_json(r#"{"buckets": {"buckets": []}}"#).is_err());
    }
}

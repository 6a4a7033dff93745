//! `features.toml`: every threshold, seed and hyperparameter in one file.
//!
//! All tables and keys are optional; a missing key takes its default.
//! Unknown keys are rejected so typos do not pass silently.
//!
//! ```toml
//! smile_branch = "formula"        # or "proportion"
//!
//! [thresholds]
//! occlusion = [0.6, 0.6, 0.6, 0.6, 0.6, 0.6, 0.6]
//! blur = 50.0
//! smile = 50.0
//! yaw_min = -30.0
//! yaw_max = 30.0
//! gaze_range_expansion = 1.25
//!
//! [generic.kmeans]
//! k = 5
//! restarts = 20
//! max_iterations = 100
//! seed = 24301
//!
//! [generic.lines]
//! edge_percentile = 90.0
//! static_tolerance_deg = 10.0
//! min_votes = 30
//! min_length = 20.0
//! max_gap = 3
//! max_lines = 64
//!
//! [provider]
//! kind = "fixture"                # or "http"
//! base_url = "http://127.0.0.1:8500"
//! path = "/faces"
//! timeout_ms = 10000
//! retries = 2
//!
//! [dataset]
//! min_raters = 5
//! max_raters = 20
//! good_threshold = 6.0
//!
//! [ml]
//! seed = 2021
//! cv_folds = 10
//! filter_folds = 5
//! [ml.svm]
//! gamma = 2.0
//! c = 1.0
//! tolerance = 0.001
//! max_iterations = 10000
//! [ml.forest]
//! trees = 130
//! max_depth = 5
//! mtry = 9
//! min_samples_leaf = 1
//! seed = 17
//! [ml.importance_forest]
//! trees = 200
//! max_depth = 8
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::DatasetConfig;
use crate::face_model::{FaceProvider, HttpProviderConfig, ThresholdConfig};
use crate::generic_features::GenericConfig;
use crate::group_features::SmileBranch;
use crate::ml::MlConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Fixture,
    Http,
}

/// Face metadata source. The HTTP keys are ignored in fixture mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub base_url: String,
    pub path: String,
    pub timeout_ms: u64,
    pub retries: u32,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        let http = HttpProviderConfig::default();
        Self {
            kind: ProviderKind::Fixture,
            base_url: http.base_url,
            path: http.path,
            timeout_ms: http.timeout_ms,
            retries: http.retries,
        }
    }
}

impl ProviderConfig {
    pub fn provider(&self) -> FaceProvider {
        match self.kind {
            ProviderKind::Fixture => FaceProvider::Fixture,
            ProviderKind::Http => FaceProvider::Http(HttpProviderConfig {
                base_url: self.base_url.clone(),
                path: self.path.clone(),
                timeout_ms: self.timeout_ms,
                retries: self.retries,
            }),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub smile_branch: SmileBranch,
    pub thresholds: ThresholdConfig<f64>,
    pub generic: GenericConfig,
    pub provider: ProviderConfig,
    pub dataset: DatasetConfig,
    pub ml: MlConfig<f64>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.thresholds.validate().map_err(ConfigError::Invalid)?;
        self.dataset.validate().map_err(ConfigError::Invalid)?;
        let k = &self.generic.kmeans;
        if k.k == 0 || k.restarts == 0 || k.max_iterations == 0 {
            return Err(ConfigError::Invalid("k-means k, restarts and max_iterations must be positive".into()));
        }
        let l = &self.generic.lines;
        if !(0.0..=100.0).contains(&l.edge_percentile) {
            return Err(ConfigError::Invalid(format!(
                "edge percentile {} outside [0, 100]",
                l.edge_percentile
            )));
        }
        if !(0.0..45.0).contains(&l.static_tolerance_deg) {
            return Err(ConfigError::Invalid(format!(
                "static tolerance {} outside [0, 45)",
                l.static_tolerance_deg
            )));
        }
        let m = &self.ml;
        if !(m.svm.gamma > 0.0 && m.svm.c > 0.0 && m.svm.tolerance > 0.0) {
            return Err(ConfigError::Invalid("svm gamma, c and tolerance must be positive".into()));
        }
        if m.forest.trees == 0 || m.importance_forest.trees == 0 {
            return Err(ConfigError::Invalid("forests need at least one tree".into()));
        }
        if m.cv_folds < 2 || m.filter_folds < 2 {
            return Err(ConfigError::Invalid("cv_folds and filter_folds must be at least 2".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn documented_example_parses() {
        let doc: String = include_str!("config.rs")
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| format!("{}\n", l.trim_start_matches("//!").trim_start()))
            .collect();
        let cfg = Config::from_toml(&doc).unwrap();
        assert_eq!(cfg, Config::default());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = Config {
            smile_branch: SmileBranch::Proportion,
            ..Config::default()
        };
        cfg.thresholds.blur = 40.0;
        cfg.provider.kind = ProviderKind::Http;
        cfg.dataset.min_raters = 1;
        assert_eq!(Config::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_typos_and_bad_values() {
        assert!(matches!(Config::from_toml("smile_brnch = \"formula\""), Err(ConfigError::Parse(_))));
        assert!(matches!(
            Config::from_toml("[thresholds]\nblur = 120.0"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            Config::from_toml("[ml]\ncv_folds = 1"),
            Err(ConfigError::Invalid(_))
        ));
    }
}

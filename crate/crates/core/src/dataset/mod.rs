//! Photo registry and human ratings.
//!
//! A photo's ground-truth score is the mean of its ratings once at least
//! `min_raters` people have rated it; the binary label is good iff that mean
//! reaches `good_threshold`.

mod store;

pub use store::{Dataset, RatingAck, Store};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_SCORE: u8 = 1;
pub const MAX_SCORE: u8 = 10;
pub const HISTOGRAM_BINS: usize = 11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub min_raters: usize,
    /// Ratings past this count are stored but flagged.
    pub max_raters: usize,
    pub good_threshold: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            min_raters: 5,
            max_raters: 20,
            good_threshold: 6.0,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_raters == 0 {
            return Err("min_raters must be at least 1".into());
        }
        if self.max_raters < self.min_raters {
            return Err(format!(
                "max_raters {} below min_raters {}",
                self.max_raters, self.min_raters
            ));
        }
        if !self.good_threshold.is_finite() {
            return Err("good_threshold must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("score {0} outside 1..=10")]
    ScoreRange(i64),
    #[error("unknown photo `{0}`")]
    UnknownPhoto(String),
    #[error("rater `{rater}` already rated photo `{photo}`")]
    Duplicate { photo: String, rater: String },
    #[error("photo id `{0}` already registered")]
    DuplicatePhoto(String),
    #[error("{field} must be non-empty")]
    Empty { field: &'static str },
    #[error("insufficient ratings: {have} of {need}")]
    Insufficient { have: usize, need: usize },
    #[error("labeled photo `{0}` has no extracted features")]
    MissingFeatures(String),
    #[error("records file line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("records file {}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Split(#[from] crate::ml::MlError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    #[serde(rename = "self")]
    SelfTaken,
    ExistingDataset,
    Internet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Good,
    Bad,
}

impl Label {
    pub fn is_good(self) -> bool {
        self == Label::Good
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Photo {
    pub photo_id: String,
    /// Path of the image, relative to the store's image directory or absolute.
    pub image: String,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rating {
    pub photo_id: String,
    pub rater_id: String,
    pub score: u8,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// One line of the records file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Record {
    Photo(Photo),
    Rating(Rating),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotoRecord {
    pub photo: Photo,
    pub ratings: Vec<Rating>,
}

impl PhotoRecord {
    pub fn id(&self) -> &str {
        &self.photo.photo_id
    }

    pub fn scores(&self) -> Vec<u8> {
        self.ratings.iter().map(|r| r.score).collect()
    }

    pub fn mean_score(&self, cfg: &DatasetConfig) -> Option<f64> {
        aggregate(&self.scores(), cfg.min_raters).ok()
    }

    pub fn label(&self, cfg: &DatasetConfig) -> Option<Label> {
        self.mean_score(cfg).map(|m| binarize(m, cfg.good_threshold))
    }

    pub fn over_cap(&self, cfg: &DatasetConfig) -> bool {
        self.ratings.len() > cfg.max_raters
    }

    pub fn rated_by(&self, rater: &str) -> bool {
        self.ratings.iter().any(|r| r.rater_id == rater)
    }
}

/// Mean score rounded to 6 decimals.
pub fn aggregate(scores: &[u8], min_raters: usize) -> Result<f64, DatasetError> {
    if scores.len() < min_raters.max(1) {
        return Err(DatasetError::Insufficient {
            have: scores.len(),
            need: min_raters.max(1),
        });
    }
    let total: u64 = scores.iter().map(|&s| u64::from(s)).sum();
    let mean = total as f64 / scores.len() as f64;
    Ok((mean * 1e6).round() / 1e6)
}

/// Good iff `mean >= threshold`.
pub fn binarize(mean: f64, threshold: f64) -> Label {
    if mean >= threshold {
        Label::Good
    } else {
        Label::Bad
    }
}

pub fn check_score(score: i64) -> Result<u8, DatasetError> {
    if (i64::from(MIN_SCORE)..=i64::from(MAX_SCORE)).contains(&score) {
        Ok(score as u8)
    } else {
        Err(DatasetError::ScoreRange(score))
    }
}

/// Proportion of means falling in each integer bin 0..=10, the bin being the
/// mean rounded to the nearest integer. All zeros when there is no mean.
pub fn score_histogram(means: &[f64]) -> [f64; HISTOGRAM_BINS] {
    let mut h = [0.0; HISTOGRAM_BINS];
    if means.is_empty() {
        return h;
    }
    for &m in means {
        let bin = m.round().clamp(0.0, (HISTOGRAM_BINS - 1) as f64) as usize;
        h[bin] += 1.0;
    }
    let n = means.len() as f64;
    h.iter_mut().for_each(|v| *v /= n);
    h
}

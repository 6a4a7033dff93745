//! Normalization, the two learners, feature selection, cross-validation and
//! evaluation metrics.

pub mod cv;
pub mod forest;
pub mod importance;
pub mod metrics;
pub mod model;
pub mod selection;
pub mod svm;
pub mod tree;
pub mod zscore;

pub use forest::{Forest, ForestParams};
pub use metrics::{auc, classification_metrics, delta_table, discrimination_delta, r_squared, ClassificationMetrics};
pub use model::{
    cross_validate_classifier, cross_validate_regressor, evaluate_classifier_splits, evaluate_regressor_splits,
    fit_classifier, fit_regressor, ClassifierSplitReport, CvReport, MlConfig, ModelKind, RegressionCvReport, SplitReport,
    TrainedModel,
};
pub use selection::Selection;
pub use svm::{SvmModel, SvmParams};
pub use zscore::ZScore;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MlError {
    #[error("empty training set")]
    Empty,
    #[error("row {row} has {got} values, expected {expected}")]
    Arity { row: usize, expected: usize, got: usize },
    #[error("{0} labels for {1} rows")]
    LabelCount(usize, usize),
    #[error("value in row {row}, column {col} is not finite")]
    NotFinite { row: usize, col: usize },
    #[error("only one class present")]
    SingleClass,
    #[error("labels are constant, the statistic is undefined")]
    ConstantLabels,
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("k = {k} must be between 1 and {max}")]
    InvalidK { k: usize, max: usize },
    #[error("{folds} folds requested for {rows} rows")]
    InvalidFolds { folds: usize, rows: usize },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("model file: {0}")]
    Format(String),
    #[error("model file {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Checks that `rows` is a non-empty rectangular matrix of finite values and
/// returns its width.
pub fn check_matrix<T: crate::scalar::Real>(rows: &[Vec<T>]) -> Result<usize, MlError> {
    let width = rows.first().ok_or(MlError::Empty)?.len();
    for (r, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(MlError::Arity {
                row: r,
                expected: width,
                got: row.len(),
            });
        }
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(MlError::NotFinite { row: r, col: c });
        }
    }
    Ok(width)
}

/// Rows at the given indices, cloned.
pub fn take_rows<R: Clone>(rows: &[R], idx: &[usize]) -> Vec<R> {
    idx.iter().map(|&i| rows[i].clone()).collect()
}

/// Keeps the columns whose mask entry is set.
pub fn mask_row<T: Copy>(row: &[T], mask: &[bool]) -> Vec<T> {
    row.iter().zip(mask).filter(|(_, &m)| m).map(|(&v, _)| v).collect()
}

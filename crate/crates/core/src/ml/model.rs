//! The full learning pipeline (normalize, select, fit), its cross-validated
//! evaluation, and the model file format.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cv::{kfold, stratified_kfold, train_indices, train_test_split};
use super::forest::{Forest, ForestParams};
use super::metrics::{classification_metrics, r_squared, ClassificationMetrics};
use super::selection::{filter_select_classify, filter_select_regress, rfe_select, Selection};
use super::svm::{self, SvmModel, SvmParams};
use super::zscore::ZScore;
use super::{check_matrix, mask_row, take_rows, MlError};
use crate::scalar::{mean, Real};

pub const MODEL_MAGIC: &str = "GROUPHOTO-MODEL";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    SvmClassifier,
    RfRegressor,
}

impl ModelKind {
    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::SvmClassifier => "svm-classifier",
            ModelKind::RfRegressor => "rf-regressor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default, deny_unknown_fields)]
pub struct MlConfig<T> {
    /// Seeds fold assignment, splits and inner selection folds.
    pub seed: u64,
    pub svm: SvmParams<T>,
    /// Regressor, also used for RFE on the regression task.
    pub forest: ForestParams,
    /// Classification forest for importance ranking and classification RFE.
    pub importance_forest: ForestParams,
    pub cv_folds: usize,
    /// Folds of the single-feature accuracy filter.
    pub filter_folds: usize,
}

impl<T: Real> Default for MlConfig<T> {
    fn default() -> Self {
        Self {
            seed: 2021,
            svm: SvmParams::default(),
            forest: ForestParams::default(),
            importance_forest: ForestParams::importance_default(),
            cv_folds: 10,
            filter_folds: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", rename_all = "kebab-case", tag = "learner")]
pub enum Learner<T> {
    Svm(SvmModel<T>),
    Forest(Forest<T>),
}

/// Everything needed to score a raw feature row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TrainedModel<T> {
    pub kind: ModelKind,
    /// How `selected_mask` was chosen; reused when re-running the protocol.
    pub selection: Selection,
    pub feature_names: Vec<String>,
    pub selected_mask: Vec<bool>,
    /// Fitted on all columns of the training rows.
    pub zscore: ZScore<T>,
    pub learner: Learner<T>,
}

impl<T: Real> TrainedModel<T> {
    pub fn width(&self) -> usize {
        self.selected_mask.len()
    }

    /// Decision value for the classifier, predicted score for the regressor.
    pub fn score(&self, row: &[T]) -> Result<T, MlError> {
        if row.len() != self.width() {
            return Err(MlError::Arity {
                row: 0,
                expected: self.width(),
                got: row.len(),
            });
        }
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(MlError::NotFinite { row: 0, col: c });
        }
        let x = mask_row(&self.zscore.apply(row), &self.selected_mask);
        match &self.learner {
            Learner::Svm(m) => m.decision(&x),
            Learner::Forest(f) => f.predict(&x),
        }
    }

    /// Class of a row; only meaningful for the classifier.
    pub fn predict_good(&self, row: &[T]) -> Result<bool, MlError> {
        Ok(self.score(row)? >= T::zero())
    }

    pub fn selected_count(&self) -> usize {
        self.selected_mask.iter().filter(|&&b| b).count()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("{MODEL_MAGIC} {MODEL_VERSION} {} {}\n", self.kind.tag(), T::NAME).into_bytes();
        out.extend(serde_json::to_vec(self).expect("model serializes"));
        out.push(b'\n');
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MlError> {
        let text = std::str::from_utf8(bytes).map_err(|_| MlError::Format("not UTF-8".into()))?;
        let (header, body) = text
            .split_once('\n')
            .ok_or_else(|| MlError::Format("missing header line".into()))?;
        let fields: Vec<&str> = header.split(' ').collect();
        let [magic, version, kind, scalar] = fields[..] else {
            return Err(MlError::Format(format!("malformed header {header:?}")));
        };
        if magic != MODEL_MAGIC {
            return Err(MlError::Format("not a model file".into()));
        }
        if version != MODEL_VERSION.to_string() {
            return Err(MlError::Format(format!(
                "format version {version}, this build reads {MODEL_VERSION}"
            )));
        }
        if scalar != T::NAME {
            return Err(MlError::Format(format!("model stores {scalar} values, expected {}", T::NAME)));
        }
        let model: Self = serde_json::from_str(body).map_err(|e| MlError::Format(format!("corrupt body: {e}")))?;
        if model.kind.tag() != kind {
            return Err(MlError::Format(format!("header says {kind}, body is {}", model.kind.tag())));
        }
        let consistent = model.zscore.width() == model.width()
            && model.selected_count() >= 1
            && matches!(
                (&model.learner, model.kind),
                (Learner::Svm(_), ModelKind::SvmClassifier) | (Learner::Forest(_), ModelKind::RfRegressor)
            );
        if !consistent {
            return Err(MlError::Format("inconsistent model body".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), MlError> {
        let io = |source| MlError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut f = std::fs::File::create(path).map_err(io)?;
        f.write_all(&self.to_bytes()).map_err(io)?;
        f.sync_all().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, MlError> {
        let bytes = std::fs::read(path).map_err(|source| MlError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}

fn full_mask(width: usize) -> Vec<bool> {
    vec![true; width]
}

fn names_or_default(names: Option<&[String]>, width: usize) -> Vec<String> {
    match names {
        Some(n) if n.len() == width => n.to_vec(),
        _ => (1..=width).map(|i| format!("f{i}")).collect(),
    }
}

fn as_unit<T: Real>(labels: &[bool]) -> Vec<T> {
    labels.iter().map(|&l| if l { T::one() } else { T::zero() }).collect()
}

/// Normalizes, selects and fits the SVM classifier.
pub fn fit_classifier<T: Real>(
    rows: &[Vec<T>],
    labels: &[bool],
    selection: Selection,
    cfg: &MlConfig<T>,
    names: Option<&[String]>,
) -> Result<TrainedModel<T>, MlError> {
    let width = check_matrix(rows)?;
    if labels.len() != rows.len() {
        return Err(MlError::LabelCount(labels.len(), rows.len()));
    }
    selection.validate(width)?;
    let zscore = ZScore::fit(rows)?;
    let z = zscore.apply_all(rows);
    let mask = match selection {
        Selection::None => full_mask(width),
        Selection::Filter { k } => filter_select_classify(&z, labels, k, &cfg.svm, cfg.filter_folds, cfg.seed)?,
        Selection::Rfe { k } => rfe_select(&z, &as_unit::<T>(labels), k, &cfg.importance_forest)?,
    };
    let x: Vec<Vec<T>> = z.iter().map(|r| mask_row(r, &mask)).collect();
    let model = svm::train(&x, labels, &cfg.svm)?;
    Ok(TrainedModel {
        kind: ModelKind::SvmClassifier,
        selection,
        feature_names: names_or_default(names, width),
        selected_mask: mask,
        zscore,
        learner: Learner::Svm(model),
    })
}

/// Normalizes, selects and fits the forest regressor.
pub fn fit_regressor<T: Real>(
    rows: &[Vec<T>],
    y: &[T],
    selection: Selection,
    cfg: &MlConfig<T>,
    names: Option<&[String]>,
) -> Result<TrainedModel<T>, MlError> {
    let width = check_matrix(rows)?;
    if y.len() != rows.len() {
        return Err(MlError::LabelCount(y.len(), rows.len()));
    }
    selection.validate(width)?;
    let zscore = ZScore::fit(rows)?;
    let z = zscore.apply_all(rows);
    let mask = match selection {
        Selection::None => full_mask(width),
        Selection::Filter { k } => filter_select_regress(&z, y, k)?,
        Selection::Rfe { k } => rfe_select(&z, y, k, &cfg.forest)?,
    };
    let x: Vec<Vec<T>> = z.iter().map(|r| mask_row(r, &mask)).collect();
    let forest = Forest::train(&x, y, &cfg.forest)?;
    Ok(TrainedModel {
        kind: ModelKind::RfRegressor,
        selection,
        feature_names: names_or_default(names, width),
        selected_mask: mask,
        zscore,
        learner: Learner::Forest(forest),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FoldResult<T> {
    pub test: Vec<usize>,
    pub metrics: ClassificationMetrics<T>,
    /// Normalization fitted on this fold's training rows.
    pub zscore: ZScore<T>,
    pub selected_mask: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CvReport<T> {
    pub folds: Vec<FoldResult<T>>,
    pub mean_auc: T,
    pub mean_accuracy: T,
    pub mean_precision: T,
    pub mean_recall: T,
    pub mean_f1: T,
}

/// Stratified k-fold evaluation of the classifier pipeline. Normalization
/// and selection are refitted inside every fold.
pub fn cross_validate_classifier<T: Real>(
    rows: &[Vec<T>],
    labels: &[bool],
    selection: Selection,
    cfg: &MlConfig<T>,
) -> Result<CvReport<T>, MlError> {
    check_matrix(rows)?;
    if labels.len() != rows.len() {
        return Err(MlError::LabelCount(labels.len(), rows.len()));
    }
    let folds = stratified_kfold(labels, cfg.cv_folds, cfg.seed)?;
    let mut results = Vec::with_capacity(folds.len());
    for test in folds {
        let train = train_indices(rows.len(), &test);
        let model = fit_classifier(
            &take_rows(rows, &train),
            &take_rows(labels, &train),
            selection,
            cfg,
            None,
        )?;
        let scores = test
            .iter()
            .map(|&i| model.score(&rows[i]))
            .collect::<Result<Vec<T>, MlError>>()?;
        let metrics = classification_metrics(&scores, &take_rows(labels, &test), T::zero())?;
        results.push(FoldResult {
            test,
            metrics,
            zscore: model.zscore,
            selected_mask: model.selected_mask,
        });
    }
    let avg = |f: &dyn Fn(&ClassificationMetrics<T>) -> T| {
        mean(&results.iter().map(|r| f(&r.metrics)).collect::<Vec<T>>()).expect("at least two folds")
    };
    Ok(CvReport {
        mean_auc: avg(&|m| m.auc),
        mean_accuracy: avg(&|m| m.accuracy),
        mean_precision: avg(&|m| m.precision),
        mean_recall: avg(&|m| m.recall),
        mean_f1: avg(&|m| m.f1),
        folds: results,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SplitReport<T> {
    pub r2: Vec<T>,
    pub mean_r2: T,
    pub max_r2: T,
}

/// Repeated random train/test splits of the regressor pipeline; split `s`
/// uses seed `cfg.seed + s`.
pub fn evaluate_regressor_splits<T: Real>(
    rows: &[Vec<T>],
    y: &[T],
    splits: usize,
    test_fraction: f64,
    selection: Selection,
    cfg: &MlConfig<T>,
) -> Result<SplitReport<T>, MlError> {
    check_matrix(rows)?;
    if splits == 0 {
        return Err(MlError::Param("at least one split".into()));
    }
    let mut r2 = Vec::with_capacity(splits);
    for s in 0..splits {
        let (train, test) = train_test_split(rows.len(), test_fraction, cfg.seed.wrapping_add(s as u64))?;
        if test.len() < 2 {
            return Err(MlError::TooFewRows {
                needed: 2,
                got: test.len(),
            });
        }
        let model = fit_regressor(&take_rows(rows, &train), &take_rows(y, &train), selection, cfg, None)?;
        let pred = test
            .iter()
            .map(|&i| model.score(&rows[i]))
            .collect::<Result<Vec<T>, MlError>>()?;
        r2.push(r_squared(&pred, &take_rows(y, &test))?);
    }
    let max_r2 = r2.iter().copied().fold(T::neg_infinity(), T::max);
    Ok(SplitReport {
        mean_r2: mean(&r2).expect("non-empty"),
        max_r2,
        r2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RegressionFold<T> {
    pub test: Vec<usize>,
    pub r2: T,
    pub selected_mask: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RegressionCvReport<T> {
    pub folds: Vec<RegressionFold<T>>,
    pub mean_r2: T,
}

/// Plain k-fold evaluation of the regressor pipeline.
pub fn cross_validate_regressor<T: Real>(
    rows: &[Vec<T>],
    y: &[T],
    selection: Selection,
    cfg: &MlConfig<T>,
) -> Result<RegressionCvReport<T>, MlError> {
    check_matrix(rows)?;
    if y.len() != rows.len() {
        return Err(MlError::LabelCount(y.len(), rows.len()));
    }
    let mut folds = Vec::with_capacity(cfg.cv_folds);
    for test in kfold(rows.len(), cfg.cv_folds, cfg.seed)? {
        let train = train_indices(rows.len(), &test);
        let model = fit_regressor(&take_rows(rows, &train), &take_rows(y, &train), selection, cfg, None)?;
        let pred = test
            .iter()
            .map(|&i| model.score(&rows[i]))
            .collect::<Result<Vec<T>, MlError>>()?;
        let r2 = r_squared(&pred, &take_rows(y, &test))?;
        folds.push(RegressionFold {
            test,
            r2,
            selected_mask: model.selected_mask,
        });
    }
    let mean_r2 = mean(&folds.iter().map(|f| f.r2).collect::<Vec<T>>()).expect("at least two folds");
    Ok(RegressionCvReport { folds, mean_r2 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ClassifierSplitReport<T> {
    pub auc: Vec<T>,
    pub mean_auc: T,
    pub max_auc: T,
    pub mean_accuracy: T,
}

/// Repeated random train/test splits of the classifier pipeline, seeded like
/// [`evaluate_regressor_splits`]. A split whose test side holds one class
/// only is redrawn with the next seed.
pub fn evaluate_classifier_splits<T: Real>(
    rows: &[Vec<T>],
    labels: &[bool],
    splits: usize,
    test_fraction: f64,
    selection: Selection,
    cfg: &MlConfig<T>,
) -> Result<ClassifierSplitReport<T>, MlError> {
    check_matrix(rows)?;
    if splits == 0 {
        return Err(MlError::Param("at least one split".into()));
    }
    let (mut auc, mut acc) = (Vec::with_capacity(splits), Vec::with_capacity(splits));
    let mut seed = cfg.seed;
    let mut redraws = 0;
    while auc.len() < splits {
        let (train, test) = train_test_split(rows.len(), test_fraction, seed)?;
        seed = seed.wrapping_add(1);
        let test_labels = take_rows(labels, &test);
        if test_labels.iter().all(|&l| l) || test_labels.iter().all(|&l| !l) {
            redraws += 1;
            if redraws > 10 * splits {
                return Err(MlError::SingleClass);
            }
            continue;
        }
        let model = fit_classifier(&take_rows(rows, &train), &take_rows(labels, &train), selection, cfg, None)?;
        let scores = test
            .iter()
            .map(|&i| model.score(&rows[i]))
            .collect::<Result<Vec<T>, MlError>>()?;
        let m = classification_metrics(&scores, &test_labels, T::zero())?;
        auc.push(m.auc);
        acc.push(m.accuracy);
    }
    Ok(ClassifierSplitReport {
        mean_auc: mean(&auc).expect("non-empty"),
        max_auc: auc.iter().copied().fold(T::neg_infinity(), T::max),
        mean_accuracy: mean(&acc).expect("non-empty"),
        auc,
    })
}

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use grouphoto::config::ProviderKind;
use grouphoto::dataset::Store;
use grouphoto::features::{column_name, extract_photo, feature_names, FeatureTable, FEATURE_COUNT};
use grouphoto::ml::importance::{gini_importance, ranking};
use grouphoto::ml::{
    classification_metrics, cross_validate_classifier, cross_validate_regressor, discrimination_delta,
    evaluate_classifier_splits, evaluate_regressor_splits, fit_classifier, fit_regressor, r_squared, ModelKind,
    Selection,
};
use grouphoto::{Config, TrainedModel};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::output::Output;
use crate::{ProviderArg, SelectArg, Task};

const IMAGE_EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "bmp"];
const SPLIT_TEST_FRACTION: f64 = 0.2;

pub fn set_provider(cfg: &mut Config, provider: Option<ProviderArg>) {
    match provider {
        Some(ProviderArg::Fixture) => cfg.provider.kind = ProviderKind::Fixture,
        Some(ProviderArg::Http) => cfg.provider.kind = ProviderKind::Http,
        None => {}
    }
}

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn display_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// Image files directly inside `dir`, sorted by name.
fn list_images(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut images = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| io(dir, e))? {
        let path = entry.map_err(|e| io(dir, e))?.path();
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase())
            .unwrap_or_default();
        if path.is_file() && IMAGE_EXTENSIONS.contains(&ext.as_str()) {
            images.push(path);
        }
    }
    images.sort();
    Ok(images)
}

fn slot_names(width: usize) -> Vec<String> {
    if width == FEATURE_COUNT {
        feature_names().to_vec()
    } else {
        (0..width).map(column_name).collect()
    }
}

fn load_model(path: &Path) -> Result<TrainedModel, CliError> {
    Ok(TrainedModel::load(path)?)
}

fn load_table(path: &Path) -> Result<FeatureTable<f64>, CliError> {
    Ok(FeatureTable::load(path)?)
}

#[derive(Serialize)]
struct ExtractFailure {
    image: String,
    error: String,
}

#[derive(Serialize)]
struct ExtractSummary {
    images: usize,
    rows: usize,
    failed: usize,
    out: String,
    errors: String,
}

/// `<out>.errors.jsonl`
fn error_report_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".errors.jsonl");
    PathBuf::from(name)
}

/// Mean score and label per image file name, from a records file.
fn ratings_by_image(path: &Path, cfg: &Config) -> Result<HashMap<String, (f64, bool)>, CliError> {
    if !path.is_file() {
        return Err(CliError::Io(format!("{}: no such records file", path.display())));
    }
    let store = Store::open(path, cfg.dataset.clone())?;
    Ok(store
        .data()
        .labeled()
        .into_iter()
        .map(|(p, mean, label)| (display_name(Path::new(&p.photo.image)), (mean, label.is_good())))
        .collect())
}

pub fn extract(
    cfg: &Config,
    out: &Output,
    dir: &Path,
    csv: &Path,
    jobs: Option<u16>,
    records: Option<&Path>,
) -> Result<(), CliError> {
    let images = list_images(dir)?;
    let ratings = match records {
        Some(r) => ratings_by_image(r, cfg)?,
        None => HashMap::new(),
    };
    let provider = cfg.provider.provider();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.map_or(0, usize::from))
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker threads: {e}")))?;
    let results: Vec<_> = pool.install(|| {
        images
            .par_iter()
            .map(|p| extract_photo(p, cfg, &provider))
            .collect()
    });

    let mut table = FeatureTable::<f64>::new();
    let mut failures = Vec::new();
    let mut worst: Option<CliError> = None;
    for (path, res) in images.iter().zip(results) {
        let id = display_name(path);
        match res {
            Ok(f) => {
                for w in &f.warnings {
                    log::warn!("{id}: {w:?}");
                }
                let (score, label) = ratings.get(&id).map_or((None, None), |&(s, l)| (Some(s), Some(l)));
                table.push(id, f.values.to_vec(), score, label);
            }
            Err(e) => {
                failures.push(ExtractFailure {
                    image: id,
                    error: e.to_string(),
                });
                let e = CliError::from(e);
                if worst.as_ref().is_none_or(|w| e.code() > w.code()) {
                    worst = Some(e);
                }
            }
        }
    }
    table.save(csv)?;
    let report = error_report_path(csv);
    let mut text = Vec::new();
    for f in &failures {
        serde_json::to_writer(&mut text, f).expect("failure serializes");
        text.push(b'\n');
    }
    std::fs::File::create(&report)
        .and_then(|mut file| file.write_all(&text))
        .map_err(|e| io(&report, e))?;

    for f in &failures {
        out.emit("extract-error", f);
    }
    out.emit(
        "extract",
        &ExtractSummary {
            images: images.len(),
            rows: table.len(),
            failed: failures.len(),
            out: csv.display().to_string(),
            errors: report.display().to_string(),
        },
    );
    match worst {
        None => Ok(()),
        Some(w) => {
            let msg = format!(
                "{} of {} image(s) could not be assessed, listed in {}",
                failures.len(),
                images.len(),
                report.display()
            );
            Err(match w {
                CliError::Io(_) => CliError::Io(msg),
                _ => CliError::Validation(msg),
            })
        }
    }
}

#[derive(Serialize)]
struct ClassFold {
    fold: usize,
    rows: usize,
    auc: f64,
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
    selected: usize,
}

#[derive(Serialize)]
struct ClassCv {
    folds: usize,
    mean_auc: f64,
    mean_accuracy: f64,
    mean_precision: f64,
    mean_recall: f64,
    mean_f1: f64,
}

#[derive(Serialize)]
struct RegFold {
    fold: usize,
    rows: usize,
    r2: f64,
    selected: usize,
}

#[derive(Serialize)]
struct RegCv {
    folds: usize,
    mean_r2: f64,
}

#[derive(Serialize)]
struct ModelSaved {
    path: String,
    model: &'static str,
    rows: usize,
    selected: usize,
    features: Vec<String>,
}

fn count(mask: &[bool]) -> usize {
    mask.iter().filter(|&&b| b).count()
}

pub fn train(
    cfg: &Config,
    out: &Output,
    task: Task,
    features: &Path,
    select: SelectArg,
    k: usize,
    model_path: &Path,
) -> Result<(), CliError> {
    let table = load_table(features)?;
    let selection = match select {
        SelectArg::None => Selection::None,
        SelectArg::Filter => Selection::Filter { k },
        SelectArg::Rfe => Selection::Rfe { k },
    };
    selection.validate(table.width())?;
    let names = slot_names(table.width());
    let (model, rows) = match task {
        Task::Classify => {
            let (rows, labels) = table.labeled();
            if rows.is_empty() {
                return Err(CliError::Validation(format!("{}: no labeled rows", features.display())));
            }
            let rep = cross_validate_classifier(&rows, &labels, selection, &cfg.ml)?;
            for (i, f) in rep.folds.iter().enumerate() {
                out.emit(
                    "fold",
                    &ClassFold {
                        fold: i + 1,
                        rows: f.test.len(),
                        auc: f.metrics.auc,
                        accuracy: f.metrics.accuracy,
                        precision: f.metrics.precision,
                        recall: f.metrics.recall,
                        f1: f.metrics.f1,
                        selected: count(&f.selected_mask),
                    },
                );
            }
            out.emit(
                "cv",
                &ClassCv {
                    folds: rep.folds.len(),
                    mean_auc: rep.mean_auc,
                    mean_accuracy: rep.mean_accuracy,
                    mean_precision: rep.mean_precision,
                    mean_recall: rep.mean_recall,
                    mean_f1: rep.mean_f1,
                },
            );
            (fit_classifier(&rows, &labels, selection, &cfg.ml, Some(&names))?, rows.len())
        }
        Task::Regress => {
            let (rows, y) = table.scored();
            if rows.is_empty() {
                return Err(CliError::Validation(format!("{}: no scored rows", features.display())));
            }
            let rep = cross_validate_regressor(&rows, &y, selection, &cfg.ml)?;
            for (i, f) in rep.folds.iter().enumerate() {
                out.emit(
                    "fold",
                    &RegFold {
                        fold: i + 1,
                        rows: f.test.len(),
                        r2: f.r2,
                        selected: count(&f.selected_mask),
                    },
                );
            }
            out.emit(
                "cv",
                &RegCv {
                    folds: rep.folds.len(),
                    mean_r2: rep.mean_r2,
                },
            );
            (fit_regressor(&rows, &y, selection, &cfg.ml, Some(&names))?, rows.len())
        }
    };
    model.save(model_path)?;
    out.emit(
        "model",
        &ModelSaved {
            path: model_path.display().to_string(),
            model: model.kind.tag(),
            rows,
            selected: model.selected_count(),
            features: model
                .feature_names
                .iter()
                .zip(&model.selected_mask)
                .filter(|(_, &m)| m)
                .map(|(n, _)| n.clone())
                .collect(),
        },
    );
    Ok(())
}

fn check_image_model(model: &TrainedModel) -> Result<(), CliError> {
    if model.width() != FEATURE_COUNT {
        return Err(CliError::Validation(format!(
            "model expects {} features, images yield {FEATURE_COUNT}",
            model.width()
        )));
    }
    Ok(())
}

fn score_image(cfg: &Config, model: &TrainedModel, path: &Path) -> Result<f64, CliError> {
    let f = extract_photo(path, cfg, &cfg.provider.provider())?;
    Ok(model.score(&f.values.0)?)
}

fn class_of(model: &TrainedModel, score: f64) -> Option<&'static str> {
    match model.kind {
        ModelKind::SvmClassifier => Some(if score >= 0.0 { "good" } else { "bad" }),
        ModelKind::RfRegressor => None,
    }
}

#[derive(Serialize)]
struct ScoreLine {
    image: String,
    score: f64,
    class: Option<&'static str>,
}

pub fn score(cfg: &Config, out: &Output, model_path: &Path, images: &[PathBuf]) -> Result<(), CliError> {
    let model = load_model(model_path)?;
    check_image_model(&model)?;
    let mut worst: Option<CliError> = None;
    for img in images {
        match score_image(cfg, &model, img) {
            Ok(s) => out.emit(
                "score",
                &ScoreLine {
                    image: img.display().to_string(),
                    score: s,
                    class: class_of(&model, s),
                },
            ),
            Err(e) => {
                eprintln!("error: {}: {e}", img.display());
                if worst.as_ref().is_none_or(|w| e.code() > w.code()) {
                    worst = Some(e);
                }
            }
        }
    }
    worst.map_or(Ok(()), Err)
}

#[derive(Serialize)]
struct ClassEval {
    rows: usize,
    auc: f64,
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
}

#[derive(Serialize)]
struct RegEval {
    rows: usize,
    r2: f64,
}

#[derive(Serialize)]
struct SplitLine {
    split: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    r2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    auc: Option<f64>,
}

#[derive(Serialize)]
struct RegSplits {
    splits: usize,
    mean_r2: f64,
    max_r2: f64,
}

#[derive(Serialize)]
struct ClassSplits {
    splits: usize,
    mean_auc: f64,
    max_auc: f64,
    mean_accuracy: f64,
}

pub fn evaluate(
    cfg: &Config,
    out: &Output,
    model_path: &Path,
    features: &Path,
    splits: Option<usize>,
) -> Result<(), CliError> {
    let model = load_model(model_path)?;
    let table = load_table(features)?;
    if !table.is_empty() && table.width() != model.width() {
        return Err(CliError::Validation(format!(
            "model expects {} features, {} has {}",
            model.width(),
            features.display(),
            table.width()
        )));
    }
    match (model.kind, splits) {
        (ModelKind::SvmClassifier, None) => {
            let (rows, labels) = table.labeled();
            let scores = rows.iter().map(|r| model.score(r)).collect::<Result<Vec<f64>, _>>()?;
            let m = classification_metrics(&scores, &labels, 0.0)?;
            out.emit(
                "evaluate",
                &ClassEval {
                    rows: rows.len(),
                    auc: m.auc,
                    accuracy: m.accuracy,
                    precision: m.precision,
                    recall: m.recall,
                    f1: m.f1,
                },
            );
        }
        (ModelKind::RfRegressor, None) => {
            let (rows, y) = table.scored();
            let pred = rows.iter().map(|r| model.score(r)).collect::<Result<Vec<f64>, _>>()?;
            out.emit(
                "evaluate",
                &RegEval {
                    rows: rows.len(),
                    r2: r_squared(&pred, &y)?,
                },
            );
        }
        (ModelKind::RfRegressor, Some(n)) => {
            let (rows, y) = table.scored();
            let rep = evaluate_regressor_splits(&rows, &y, n, SPLIT_TEST_FRACTION, model.selection, &cfg.ml)?;
            for (i, &r2) in rep.r2.iter().enumerate() {
                out.emit(
                    "split",
                    &SplitLine {
                        split: i + 1,
                        r2: Some(r2),
                        auc: None,
                    },
                );
            }
            out.emit(
                "splits",
                &RegSplits {
                    splits: n,
                    mean_r2: rep.mean_r2,
                    max_r2: rep.max_r2,
                },
            );
        }
        (ModelKind::SvmClassifier, Some(n)) => {
            let (rows, labels) = table.labeled();
            let rep = evaluate_classifier_splits(&rows, &labels, n, SPLIT_TEST_FRACTION, model.selection, &cfg.ml)?;
            for (i, &auc) in rep.auc.iter().enumerate() {
                out.emit(
                    "split",
                    &SplitLine {
                        split: i + 1,
                        r2: None,
                        auc: Some(auc),
                    },
                );
            }
            out.emit(
                "splits",
                &ClassSplits {
                    splits: n,
                    mean_auc: rep.mean_auc,
                    max_auc: rep.max_auc,
                    mean_accuracy: rep.mean_accuracy,
                },
            );
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct DeltaLine {
    standard: String,
    other: String,
    standard_score: f64,
    other_score: f64,
    delta: f64,
}

pub fn compare(
    cfg: &Config,
    out: &Output,
    model_path: &Path,
    standard: &Path,
    others: &[PathBuf],
) -> Result<(), CliError> {
    let model = load_model(model_path)?;
    check_image_model(&model)?;
    let s0 = score_image(cfg, &model, standard)?;
    for o in others {
        let s = score_image(cfg, &model, o)?;
        out.emit(
            "delta",
            &DeltaLine {
                standard: standard.display().to_string(),
                other: o.display().to_string(),
                standard_score: s0,
                other_score: s,
                delta: discrimination_delta(s0, s),
            },
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct ImportanceLine {
    rank: usize,
    feature: String,
    name: String,
    value: f64,
}

pub fn importance(cfg: &Config, out: &Output, features: &Path) -> Result<(), CliError> {
    let table = load_table(features)?;
    let (mut rows, mut labels) = table.labeled();
    if rows.is_empty() {
        let (r, y) = table.scored();
        rows = r;
        labels = y.iter().map(|&s| s >= cfg.dataset.good_threshold).collect();
    }
    if rows.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: importance needs labeled or scored rows",
            features.display()
        )));
    }
    let imp = gini_importance(&rows, &labels, &cfg.ml.importance_forest)?;
    let names = slot_names(table.width());
    for (rank, j) in ranking(&imp).into_iter().enumerate() {
        out.emit(
            "importance",
            &ImportanceLine {
                rank: rank + 1,
                feature: column_name(j),
                name: names[j].clone(),
                value: imp[j],
            },
        );
    }
    Ok(())
}

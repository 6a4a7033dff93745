//! Feature selection: a single-feature filter and recursive elimination.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{stratified_kfold, train_indices};
use super::forest::{Forest, ForestParams};
use super::svm::{self, SvmParams};
use super::zscore::ZScore;
use super::{check_matrix, MlError};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "method")]
pub enum Selection {
    None,
    Filter { k: usize },
    Rfe { k: usize },
}

impl Selection {
    pub fn validate(&self, width: usize) -> Result<(), MlError> {
        match *self {
            Selection::None => Ok(()),
            Selection::Filter { k } | Selection::Rfe { k } => {
                if k == 0 || k > width {
                    Err(MlError::InvalidK { k, max: width })
                } else {
                    Ok(())
                }
            }
        }
    }
}

type Predictor<T> = Box<dyn Fn(&[T]) -> bool>;

fn column<T: Real>(rows: &[Vec<T>], j: usize) -> Vec<Vec<T>> {
    rows.iter().map(|r| vec![r[j]]).collect()
}

/// Mask with the `k` best-scoring features; ties prefer lower indices.
pub fn top_k_mask<T: Real>(scores: &[T], k: usize) -> Vec<bool> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));
    let mut mask = vec![false; scores.len()];
    idx.iter().take(k).for_each(|&i| mask[i] = true);
    mask
}

/// Cross-validated accuracy of an SVM trained on feature `j` alone.
pub fn single_feature_accuracy<T: Real>(
    rows: &[Vec<T>],
    labels: &[bool],
    j: usize,
    params: &SvmParams<T>,
    folds: &[Vec<usize>],
) -> Result<T, MlError> {
    let col = column(rows, j);
    let mut correct = 0usize;
    for test in folds {
        let train = train_indices(rows.len(), test);
        let x: Vec<Vec<T>> = train.iter().map(|&i| col[i].clone()).collect();
        let y: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
        let z = ZScore::fit(&x)?;
        let predict: Predictor<T> = match svm::train(&z.apply_all(&x), &y, params) {
            Ok(m) => Box::new(move |r: &[T]| m.predict(&z.apply(r)).unwrap_or(false)),
            Err(MlError::SingleClass) => {
                let only = y[0];
                Box::new(move |_: &[T]| only)
            }
            Err(e) => return Err(e),
        };
        correct += test.iter().filter(|&&i| predict(&col[i]) == labels[i]).count();
    }
    Ok(T::from_count(correct) / T::from_count(rows.len()))
}

/// Keeps the `k` features with the best single-feature CV accuracy.
pub fn filter_select_classify<T: Real>(
    rows: &[Vec<T>],
    labels: &[bool],
    k: usize,
    params: &SvmParams<T>,
    inner_folds: usize,
    seed: u64,
) -> Result<Vec<bool>, MlError> {
    let width = check_matrix(rows)?;
    Selection::Filter { k }.validate(width)?;
    let minority = labels.iter().filter(|&&l| l).count().min(labels.iter().filter(|&&l| !l).count());
    if minority == 0 {
        return Err(MlError::SingleClass);
    }
    let folds = stratified_kfold(labels, inner_folds.min(rows.len()).max(2), seed)?;
    let scores = (0..width)
        .into_par_iter()
        .map(|j| single_feature_accuracy(rows, labels, j, params, &folds))
        .collect::<Result<Vec<T>, MlError>>()?;
    Ok(top_k_mask(&scores, k))
}

/// Absolute Pearson correlation of each column with `y`; 0 for constant columns.
pub fn abs_correlations<T: Real>(rows: &[Vec<T>], y: &[T]) -> Vec<T> {
    let n = T::from_count(rows.len());
    let my = y.iter().copied().sum::<T>() / n;
    let width = rows[0].len();
    (0..width)
        .map(|j| {
            let mx = rows.iter().map(|r| r[j]).sum::<T>() / n;
            let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
            for (r, &v) in rows.iter().zip(y) {
                let (dx, dy) = (r[j] - mx, v - my);
                sxy += dx * dy;
                sxx += dx * dx;
                syy += dy * dy;
            }
            let d = (sxx * syy).sqrt();
            if d > T::zero() {
                (sxy / d).abs()
            } else {
                T::zero()
            }
        })
        .collect()
}

/// Regression filter: the `k` columns most correlated with the target.
pub fn filter_select_regress<T: Real>(rows: &[Vec<T>], y: &[T], k: usize) -> Result<Vec<bool>, MlError> {
    let width = check_matrix(rows)?;
    Selection::Filter { k }.validate(width)?;
    Ok(top_k_mask(&abs_correlations(rows, y), k))
}

/// Drops the least important feature of a refitted forest, one at a time,
/// until `k` remain. Ties drop the highest index first.
pub fn rfe_select<T: Real>(rows: &[Vec<T>], y: &[T], k: usize, params: &ForestParams) -> Result<Vec<bool>, MlError> {
    let width = check_matrix(rows)?;
    Selection::Rfe { k }.validate(width)?;
    let mut active: Vec<usize> = (0..width).collect();
    while active.len() > k {
        let sub: Vec<Vec<T>> = rows.iter().map(|r| active.iter().map(|&j| r[j]).collect()).collect();
        let forest = Forest::train(&sub, y, params)?;
        let mut worst = 0;
        for (pos, &v) in forest.importance.iter().enumerate() {
            if v <= forest.importance[worst] {
                worst = pos;
            }
        }
        active.remove(worst);
    }
    let mut mask = vec![false; width];
    active.into_iter().for_each(|j| mask[j] = true);
    Ok(mask)
}

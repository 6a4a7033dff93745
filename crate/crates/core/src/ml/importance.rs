use super::forest::{Forest, ForestParams};
use super::MlError;
use crate::scalar::Real;

/// Gini importance from a classification forest on binary labels, summing to 1.
pub fn gini_importance<T: Real>(rows: &[Vec<T>], labels: &[bool], params: &ForestParams) -> Result<Vec<T>, MlError> {
    let y: Vec<T> = labels.iter().map(|&l| if l { T::one() } else { T::zero() }).collect();
    Ok(Forest::train(rows, &y, params)?.importance)
}

/// Feature indices from most to least important; ties keep index order.
pub fn ranking<T: Real>(importance: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..importance.len()).collect();
    idx.sort_by(|&a, &b| importance[b].partial_cmp(&importance[a]).expect("finite importance"));
    idx
}

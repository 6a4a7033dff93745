//! Bagged CART forests. Every tree draws from its own random stream derived
//! from the forest seed, so results do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, Tree, TreeParams};
use super::{check_matrix, MlError};
use crate::scalar::Real;

pub const MIN_FOREST_ROWS: usize = 5;

/// Default features per split: `floor(sqrt(90))` for the full feature vector.
/// It stays 9 when selection narrows the input, capped at the width.
pub const DEFAULT_MTRY: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    /// Features per split; `None` means `floor(sqrt(width))`.
    pub mtry: Option<usize>,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            trees: 130,
            max_depth: 5,
            mtry: Some(DEFAULT_MTRY),
            min_samples_leaf: 1,
            seed: 17,
        }
    }
}

impl ForestParams {
    /// Settings of the classification forest used for importance ranking.
    pub fn importance_default() -> Self {
        Self {
            trees: 200,
            max_depth: 8,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Forest<T> {
    pub trees: Vec<Tree<T>>,
    pub width: usize,
    /// Mean over trees of each tree's normalized impurity decrease.
    pub importance: Vec<T>,
}

impl<T: Real> Forest<T> {
    pub fn train(rows: &[Vec<T>], y: &[T], p: &ForestParams) -> Result<Self, MlError> {
        let width = check_matrix(rows)?;
        if y.len() != rows.len() {
            return Err(MlError::LabelCount(y.len(), rows.len()));
        }
        if rows.len() < MIN_FOREST_ROWS {
            return Err(MlError::TooFewRows {
                needed: MIN_FOREST_ROWS,
                got: rows.len(),
            });
        }
        if p.trees == 0 {
            return Err(MlError::Param("a forest needs at least one tree".into()));
        }
        if let Some(bad) = y.iter().position(|v| !v.is_finite()) {
            return Err(MlError::NotFinite { row: bad, col: width });
        }
        let mtry = p
            .mtry
            .unwrap_or_else(|| ((width as f64).sqrt().floor() as usize).max(1))
            .clamp(1, width);
        let tp = TreeParams {
            max_depth: p.max_depth,
            mtry,
            min_samples_leaf: p.min_samples_leaf,
        };
        let n = rows.len();
        let grown: Vec<(Tree<T>, Vec<T>)> = (0..p.trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
                rng.set_stream(t as u64);
                let samples: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let mut imp = vec![T::zero(); width];
                let tree = grow(rows, y, samples, &tp, &mut rng, &mut imp);
                (tree, imp)
            })
            .collect();

        let mut importance = vec![T::zero(); width];
        let mut trees = Vec::with_capacity(grown.len());
        for (tree, imp) in grown {
            let total: T = imp.iter().copied().sum();
            if total > T::zero() {
                for (a, v) in importance.iter_mut().zip(&imp) {
                    *a += *v / total;
                }
            }
            trees.push(tree);
        }
        Ok(Self {
            trees,
            width,
            importance: normalize(importance),
        })
    }

    pub fn predict(&self, row: &[T]) -> Result<T, MlError> {
        if row.len() != self.width {
            return Err(MlError::Arity {
                row: 0,
                expected: self.width,
                got: row.len(),
            });
        }
        Ok(self.trees.iter().map(|t| t.predict(row)).sum::<T>() / T::from_count(self.trees.len()))
    }
}

/// Scales to sum 1; an all-zero vector becomes uniform.
pub fn normalize<T: Real>(mut v: Vec<T>) -> Vec<T> {
    let total: T = v.iter().copied().sum();
    if total > T::zero() {
        v.iter_mut().for_each(|x| *x /= total);
    } else if !v.is_empty() {
        let u = T::one() / T::from_count(v.len());
        v.iter_mut().for_each(|x| *x = u);
    }
    v
}

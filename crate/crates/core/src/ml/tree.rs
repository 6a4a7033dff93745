//! CART trees grown by squared-error reduction.
//!
//! On 0/1 targets the Gini impurity `2p(1-p)` is exactly twice the variance
//! `p(1-p)`, so the same splitter serves classification forests and their
//! normalized importances are the Gini importances.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub enum Node<T> {
    Leaf {
        value: T,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Features examined per split (more are tried only if none can split).
    pub mtry: usize,
    pub min_samples_leaf: usize,
}

impl<T: Real> Tree<T> {
    pub fn predict(&self, row: &[T]) -> T {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct BestSplit<T> {
    feature: usize,
    threshold: T,
    decrease: T,
    left: Vec<usize>,
    right: Vec<usize>,
}

fn sse<T: Real>(y: &[T], samples: &[usize]) -> (T, T) {
    let n = T::from_count(samples.len());
    let mean = samples.iter().map(|&i| y[i]).sum::<T>() / n;
    let sse = samples.iter().map(|&i| (y[i] - mean) * (y[i] - mean)).sum();
    (mean, sse)
}

fn best_split<T: Real, R: Rng>(
    rows: &[Vec<T>],
    y: &[T],
    samples: &[usize],
    mean: T,
    parent_sse: T,
    params: &TreeParams,
    rng: &mut R,
) -> Option<BestSplit<T>> {
    let width = rows[0].len();
    let mut features: Vec<usize> = (0..width).collect();
    let mut best: Option<(usize, T, T)> = None;
    let mut pairs: Vec<(T, T)> = Vec::with_capacity(samples.len());
    let n = samples.len();
    let min_leaf = params.min_samples_leaf.max(1);
    let floor = parent_sse * T::epsilon() * T::lit(64.0);

    for k in 0..width {
        // partial Fisher-Yates: features[k] is the next random candidate
        let pick = rng.gen_range(k..width);
        features.swap(k, pick);
        if k >= params.mtry.max(1) && best.is_some() {
            break;
        }
        let f = features[k];
        pairs.clear();
        pairs.extend(samples.iter().map(|&i| (rows[i][f], y[i] - mean)));
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
        if pairs[0].0 == pairs[n - 1].0 {
            continue;
        }
        let total: T = pairs.iter().map(|p| p.1).sum();
        let mut left_sum = T::zero();
        for s in 0..n - 1 {
            left_sum += pairs[s].1;
            let nl = s + 1;
            if pairs[s].0 == pairs[s + 1].0 || nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let (l, r) = (T::from_count(nl), T::from_count(n - nl));
            let right_sum = total - left_sum;
            // SSE reduction relative to the parent mean
            let decrease = left_sum * left_sum / l + right_sum * right_sum / r - total * total / T::from_count(n);
            if decrease > floor && best.is_none_or(|b| decrease > b.2) {
                let (a, b) = (pairs[s].0, pairs[s + 1].0);
                let mid = (a + b) * T::lit(0.5);
                let threshold = if mid < b { mid } else { a };
                best = Some((f, threshold, decrease));
            }
        }
    }
    let (feature, threshold, decrease) = best?;
    let (left, right) = samples.iter().partition(|&&i| rows[i][feature] <= threshold);
    Some(BestSplit {
        feature,
        threshold,
        decrease,
        left,
        right,
    })
}

/// Grows a tree on `samples` (row indices, repeats allowed). Impurity
/// decreases are added to `importance` per feature.
pub fn grow<T: Real, R: Rng>(
    rows: &[Vec<T>],
    y: &[T],
    samples: Vec<usize>,
    params: &TreeParams,
    rng: &mut R,
    importance: &mut [T],
) -> Tree<T> {
    let mut nodes = vec![Node::Leaf { value: T::zero() }];
    let mut stack = vec![(0usize, samples, 0usize)];
    while let Some((id, s, depth)) = stack.pop() {
        let (mean, parent_sse) = sse(y, &s);
        nodes[id] = Node::Leaf { value: mean };
        if depth >= params.max_depth || s.len() < 2 * params.min_samples_leaf.max(1) || parent_sse <= T::zero() {
            continue;
        }
        let Some(split) = best_split(rows, y, &s, mean, parent_sse, params, rng) else {
            continue;
        };
        importance[split.feature] += split.decrease;
        let (l, r) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf { value: T::zero() });
        nodes.push(Node::Leaf { value: T::zero() });
        nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: r,
        };
        stack.push((r, split.right, depth + 1));
        stack.push((l, split.left, depth + 1));
    }
    Tree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(depth: usize, mtry: usize) -> TreeParams {
        TreeParams {
            max_depth: depth,
            mtry,
            min_samples_leaf: 1,
        }
    }

    #[test]
    fn step_function_is_one_split() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 0.0]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i < 4 { 1.0 } else { 5.0 }).collect();
        let mut imp = vec![0.0; 2];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = grow(&rows, &y, (0..10).collect(), &params(5, 2), &mut rng, &mut imp);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.predict(&[3.0, 0.0]), 1.0);
        assert_eq!(t.predict(&[3.6, 0.0]), 5.0);
        // SSE drop = 10 * var = 4 * 16 * 6 / 10
        assert!((imp[0] - 38.4).abs() < 1e-9);
        assert_eq!(imp[1], 0.0);
    }

    #[test]
    fn constant_target_is_a_leaf() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let mut imp = vec![0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = grow(&rows, &[2.5; 6], (0..6).collect(), &params(5, 1), &mut rng, &mut imp);
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict(&[100.0]), 2.5);
    }

    #[test]
    fn respects_depth_and_falls_back_past_constant_features() {
        let rows: Vec<Vec<f64>> = (0..64).map(|i| vec![0.0, 0.0, 0.0, i as f64]).collect();
        let y: Vec<f64> = (0..64).map(|i| (i * i) as f64).collect();
        let mut imp = vec![0.0; 4];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = grow(&rows, &y, (0..64).collect(), &params(3, 1), &mut rng, &mut imp);
        assert_eq!(t.depth(), 3);
        assert!(imp[3] > 0.0 && imp[..3].iter().all(|&v| v == 0.0));
    }
}

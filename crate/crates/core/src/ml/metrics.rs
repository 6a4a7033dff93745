//! ROC/AUC, thresholded classification scores, R² and the discrimination δ.

use serde::{Deserialize, Serialize};

use super::MlError;
use crate::scalar::Real;

/// ROC points `(fpr, tpr)` from (0,0) to (1,1). Equal scores form one step,
/// so ties contribute a diagonal segment.
pub fn roc_curve<T: Real>(scores: &[T], positive: &[bool]) -> Result<Vec<(T, T)>, MlError> {
    if scores.len() != positive.len() {
        return Err(MlError::LabelCount(positive.len(), scores.len()));
    }
    let p = positive.iter().filter(|&&b| b).count();
    let n = positive.len() - p;
    if p == 0 || n == 0 {
        return Err(MlError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));
    let (pf, nf) = (T::from_count(p), T::from_count(n));
    let mut out = vec![(T::zero(), T::zero())];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push((T::from_count(fp) / nf, T::from_count(tp) / pf));
    }
    Ok(out)
}

/// Trapezoidal area under the ROC curve.
pub fn auc<T: Real>(scores: &[T], positive: &[bool]) -> Result<T, MlError> {
    let roc = roc_curve(scores, positive)?;
    Ok(roc
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * T::lit(0.5))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ClassificationMetrics<T> {
    pub auc: T,
    pub accuracy: T,
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub roc: Vec<(T, T)>,
}

/// Metrics with `score >= threshold` predicted positive. Precision, recall
/// and F1 are 0 when their denominators vanish.
pub fn classification_metrics<T: Real>(
    scores: &[T],
    positive: &[bool],
    threshold: T,
) -> Result<ClassificationMetrics<T>, MlError> {
    let roc = roc_curve(scores, positive)?;
    let auc = roc
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * T::lit(0.5))
        .sum();
    let (mut tp, mut fp, mut tn, mut fne) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &y) in scores.iter().zip(positive) {
        match (s >= threshold, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fne += 1,
        }
    }
    let ratio = |a: usize, b: usize| {
        if b == 0 {
            T::zero()
        } else {
            T::from_count(a) / T::from_count(b)
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fne);
    let f1 = if precision + recall > T::zero() {
        T::lit(2.0) * precision * recall / (precision + recall)
    } else {
        T::zero()
    };
    Ok(ClassificationMetrics {
        auc,
        accuracy: ratio(tp + tn, scores.len()),
        precision,
        recall,
        f1,
        roc,
    })
}

/// Coefficient of determination against the mean of `truth`.
pub fn r_squared<T: Real>(predicted: &[T], truth: &[T]) -> Result<T, MlError> {
    if predicted.len() != truth.len() {
        return Err(MlError::LabelCount(truth.len(), predicted.len()));
    }
    let mean = crate::scalar::mean(truth).ok_or(MlError::Empty)?;
    let ss_tot: T = truth.iter().map(|&y| (y - mean) * (y - mean)).sum();
    if ss_tot <= T::zero() {
        return Err(MlError::ConstantLabels);
    }
    let ss_res: T = predicted.iter().zip(truth).map(|(&p, &y)| (p - y) * (p - y)).sum();
    Ok(T::one() - ss_res / ss_tot)
}

/// Score of the standard photo minus the score of a variant.
pub fn discrimination_delta<T: Real>(standard: T, other: T) -> T {
    standard - other
}

/// δ of one standard photo against each variant.
pub fn delta_table<T: Real>(standard: T, others: &[T]) -> Vec<T> {
    others.iter().map(|&o| discrimination_delta(standard, o)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// P(score+ > score-) + P(tie)/2 over all pairs.
    fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let (mut wins, mut pairs) = (0.0, 0.0);
        for (i, &si) in scores.iter().enumerate() {
            for (j, &sj) in scores.iter().enumerate() {
                if labels[i] && !labels[j] {
                    pairs += 1.0;
                    if si > sj {
                        wins += 1.0;
                    } else if si == sj {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn auc_examples() {
        let l = [false, false, true, true];
        assert_eq!(auc(&[0.1, 0.2, 0.3, 0.4], &l).unwrap(), 1.0);
        assert_eq!(auc(&[0.4, 0.3, 0.2, 0.1], &l).unwrap(), 0.0);
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &l).unwrap(), 0.75);
        assert_eq!(auc(&[0.5; 4], &l).unwrap(), 0.5);
        assert!(matches!(auc(&[0.1, 0.2], &[true, true]), Err(MlError::SingleClass)));
    }

    #[test]
    fn thresholded_metrics() {
        let m = classification_metrics(&[-1.0, 0.5, 2.0, -0.5], &[false, false, true, true], 0.0).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.recall, 0.5);
        assert_eq!(m.f1, 0.5);
        assert_eq!(m.roc.first(), Some(&(0.0, 0.0)));
        assert_eq!(m.roc.last(), Some(&(1.0, 1.0)));
    }

    #[test]
    fn r_squared_examples() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
        assert_eq!(r_squared(&[2.0; 3], &y).unwrap(), 0.0);
        assert_eq!(r_squared(&[1.0, 2.0, 4.0], &y).unwrap(), 0.5);
        assert!(matches!(r_squared(&[1.0, 2.0], &[3.0, 3.0]), Err(MlError::ConstantLabels)));
    }

    #[test]
    fn delta_examples() {
        assert_eq!(discrimination_delta(6.0, 6.0), 0.0);
        assert!((discrimination_delta(8.0f64, 6.2) - 1.8).abs() < 1e-12);
        assert_eq!(delta_table(5.0, &[4.0, 7.0]), vec![1.0, -2.0]);
    }

    proptest! {
        #[test]
        fn delta_is_antisymmetric(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            prop_assert_eq!(discrimination_delta(a, b), -discrimination_delta(b, a));
        }

        #[test]
        fn auc_matches_pairwise_oracle(
            data in proptest::collection::vec((0u8..5, any::<bool>()), 2..=12)
        ) {
            let scores: Vec<f64> = data.iter().map(|d| f64::from(d.0)).collect();
            let labels: Vec<bool> = data.iter().map(|d| d.1).collect();
            prop_assume!(labels.iter().any(|&b| b) && labels.iter().any(|&b| !b));
            let a = auc(&scores, &labels).unwrap();
            prop_assert!((a - pairwise_auc(&scores, &labels)).abs() < 1e-12);
        }
    }
}

//! Seeded k-fold partitions and train/test splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::MlError;

/// Test-index sets of `k` folds over `n` rows after a seeded shuffle.
/// Sizes differ by at most one.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, MlError> {
    if k < 2 || k > n {
        return Err(MlError::InvalidFolds { folds: k, rows: n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::new(); k];
    for (pos, i) in idx.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

/// Like [`kfold`] but deals each class separately so every fold keeps the
/// class proportions (up to rounding).
pub fn stratified_kfold(labels: &[bool], k: usize, seed: u64) -> Result<Vec<Vec<usize>>, MlError> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(MlError::InvalidFolds { folds: k, rows: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut pos = 0;
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            folds[pos % k].push(i);
            pos += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

/// Complement of `test` in `0..n`.
pub fn train_indices(n: usize, test: &[usize]) -> Vec<usize> {
    let mut mark = vec![false; n];
    test.iter().for_each(|&i| mark[i] = true);
    (0..n).filter(|&i| !mark[i]).collect()
}

/// Seeded random split; returns `(train, test)` with `round(n * fraction)` test rows.
pub fn train_test_split(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), MlError> {
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(MlError::Param(format!("test fraction {test_fraction} outside [0, 1]")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (n as f64 * test_fraction).round() as usize;
    let mut test = idx[..n_test].to_vec();
    let mut train = idx[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn is_partition(folds: &[Vec<usize>], n: usize) -> bool {
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        all == (0..n).collect::<Vec<_>>()
    }

    #[test]
    fn leave_one_out() {
        let f = kfold(7, 7, 1).unwrap();
        assert!(f.iter().all(|x| x.len() == 1));
        assert!(is_partition(&f, 7));
    }

    #[test]
    fn rejects_bad_k() {
        assert!(kfold(3, 4, 0).is_err());
        assert!(kfold(3, 1, 0).is_err());
        assert!(stratified_kfold(&[true, false], 3, 0).is_err());
    }

    #[test]
    fn stratification_balances_classes() {
        let labels: Vec<bool> = (0..100).map(|i| i < 30).collect();
        let folds = stratified_kfold(&labels, 10, 5).unwrap();
        for f in &folds {
            assert_eq!(f.len(), 10);
            assert_eq!(f.iter().filter(|&&i| labels[i]).count(), 3);
        }
    }

    #[test]
    fn split_examples() {
        let (train, test) = train_test_split(10, 0.0, 1).unwrap();
        assert!(test.is_empty() && train.len() == 10);
        let a = train_test_split(50, 0.2, 9).unwrap();
        assert_eq!(a, train_test_split(50, 0.2, 9).unwrap());
        assert_eq!(a.1.len(), 10);
        assert_eq!(train_indices(50, &a.1), a.0);
    }

    proptest! {
        #[test]
        fn folds_partition_rows(n in 2usize..60, k in 2usize..12, seed in any::<u64>()) {
            prop_assume!(k <= n);
            let f = kfold(n, k, seed).unwrap();
            prop_assert!(is_partition(&f, n));
            let labels: Vec<bool> = (0..n).map(|i| (i * 7 + seed as usize).is_multiple_of(3)).collect();
            prop_assert!(is_partition(&stratified_kfold(&labels, k, seed).unwrap(), n));
        }
    }
}

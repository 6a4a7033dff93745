use serde::{Deserialize, Serialize};

use super::{check_matrix, MlError};
use crate::scalar::Real;

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ZScore<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
    /// Columns with zero spread; they transform to 0.
    pub constant: Vec<bool>,
}

impl<T: Real> ZScore<T> {
    pub fn fit(rows: &[Vec<T>]) -> Result<Self, MlError> {
        let width = check_matrix(rows)?;
        let n = T::from_count(rows.len());
        let mut mean = vec![T::zero(); width];
        for row in rows {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![T::zero(); width];
        for row in rows {
            for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std: Vec<T> = var.into_iter().map(|s| (s / n).sqrt()).collect();
        // spread below rounding noise of the mean counts as constant
        let constant = std
            .iter()
            .zip(&mean)
            .map(|(&s, &m)| s <= T::epsilon() * m.abs().max(T::one()) * T::lit(16.0))
            .collect();
        Ok(Self { mean, std, constant })
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, row: &[T]) -> Vec<T> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| {
                if self.constant[j] {
                    T::zero()
                } else {
                    (v - self.mean[j]) / self.std[j]
                }
            })
            .collect()
    }

    pub fn apply_all(&self, rows: &[Vec<T>]) -> Vec<Vec<T>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_example() {
        let rows = vec![vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]];
        let z = ZScore::fit(&rows).unwrap();
        assert_eq!(z.mean, vec![2.0, 5.0]);
        assert!((z.std[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(z.constant, vec![false, true]);
        let t: Vec<f64> = rows.iter().map(|r| z.apply(r)[0]).collect();
        let e = 1.224744871391589;
        assert!((t[0] + e).abs() < 1e-12 && t[1].abs() < 1e-15 && (t[2] - e).abs() < 1e-12);
        assert!(rows.iter().all(|r| z.apply(r)[1] == 0.0));
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(ZScore::<f64>::fit(&[]), Err(MlError::Empty)));
    }

    proptest! {
        #[test]
        fn transformed_columns_are_standard(col in proptest::collection::vec(-1e3f64..1e3, 3..40)) {
            let rows: Vec<Vec<f64>> = col.iter().map(|&v| vec![v]).collect();
            let z = ZScore::fit(&rows).unwrap();
            prop_assume!(!z.constant[0]);
            let t = z.apply_all(&rows);
            let z2 = ZScore::fit(&t).unwrap();
            prop_assert!(z2.mean[0].abs() < 1e-9);
            prop_assert!((z2.std[0] - 1.0).abs() < 1e-9);
        }
    }
}

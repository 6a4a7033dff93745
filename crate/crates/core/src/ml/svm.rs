//! Soft-margin C-SVM with an RBF kernel, trained by SMO with second-order
//! working-set selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_matrix, MlError};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default, deny_unknown_fields)]
pub struct SvmParams<T> {
    pub gamma: T,
    pub c: T,
    /// Stop once the maximal KKT violation drops below this.
    pub tolerance: T,
    pub max_iterations: usize,
}

impl<T: Real> Default for SvmParams<T> {
    fn default() -> Self {
        Self {
            gamma: T::lit(2.0),
            c: T::one(),
            tolerance: T::lit(1e-3),
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SvmModel<T> {
    pub gamma: T,
    pub c: T,
    pub support_vectors: Vec<Vec<T>>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coef: Vec<T>,
    pub bias: T,
    /// SMO iterations used; equals the cap when it did not converge.
    pub iterations: usize,
}

pub fn rbf<T: Real>(a: &[T], b: &[T], gamma: T) -> T {
    let d2: T = a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

impl<T: Real> SvmModel<T> {
    /// Signed distance-like score; positive means the `true` class.
    pub fn decision(&self, row: &[T]) -> Result<T, MlError> {
        let width = self.support_vectors.first().map_or(row.len(), Vec::len);
        if row.len() != width {
            return Err(MlError::Arity {
                row: 0,
                expected: width,
                got: row.len(),
            });
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, &a)| a * rbf(sv, row, self.gamma))
            .sum::<T>()
            + self.bias)
    }

    pub fn predict(&self, row: &[T]) -> Result<bool, MlError> {
        Ok(self.decision(row)? >= T::zero())
    }
}

pub fn train<T: Real>(rows: &[Vec<T>], labels: &[bool], p: &SvmParams<T>) -> Result<SvmModel<T>, MlError> {
    check_matrix(rows)?;
    let n = rows.len();
    if labels.len() != n {
        return Err(MlError::LabelCount(labels.len(), n));
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(MlError::SingleClass);
    }
    if !(p.gamma > T::zero() && p.c > T::zero() && p.tolerance > T::zero()) {
        return Err(MlError::Param("gamma, C and tolerance must be positive".into()));
    }

    let y: Vec<T> = labels.iter().map(|&l| if l { T::one() } else { -T::one() }).collect();
    let kernel: Vec<T> = (0..n * n)
        .into_par_iter()
        .map(|k| rbf(&rows[k / n], &rows[k % n], p.gamma))
        .collect();
    let k = |i: usize, j: usize| kernel[i * n + j];
    let q = |i: usize, j: usize| y[i] * y[j] * k(i, j);
    let c = p.c;
    let tau = T::lit(1e-12);
    let mut alpha = vec![T::zero(); n];
    // gradient of 1/2 a'Qa - e'a
    let mut grad = vec![-T::one(); n];
    let in_up = |a: T, yi: T| (yi > T::zero() && a < c) || (yi < T::zero() && a > T::zero());
    let in_low = |a: T, yi: T| (yi > T::zero() && a > T::zero()) || (yi < T::zero() && a < c);

    let mut iterations = 0;
    while iterations < p.max_iterations {
        let mut i = usize::MAX;
        let mut g_max = T::neg_infinity();
        for t in 0..n {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] >= g_max {
                if -y[t] * grad[t] > g_max || i == usize::MAX {
                    i = t;
                }
                g_max = -y[t] * grad[t];
            }
        }
        let mut g_min = T::infinity();
        let mut j = usize::MAX;
        let mut best_obj = T::infinity();
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            g_min = g_min.min(v);
            if i == usize::MAX {
                continue;
            }
            let b = g_max - v;
            if b > T::zero() {
                let mut a = k(i, i) + k(t, t) - T::lit(2.0) * k(i, t);
                if a <= T::zero() {
                    a = tau;
                }
                let obj = -(b * b) / a;
                if obj < best_obj {
                    best_obj = obj;
                    j = t;
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || g_max - g_min < p.tolerance {
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = k(i, i) + k(j, j) + T::lit(2.0) * q(i, j);
            if quad <= T::zero() {
                quad = tau;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > T::zero() {
                if alpha[j] < T::zero() {
                    alpha[j] = T::zero();
                    alpha[i] = diff;
                }
            } else if alpha[i] < T::zero() {
                alpha[i] = T::zero();
                alpha[j] = -diff;
            }
            if diff > T::zero() {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = k(i, i) + k(j, j) - T::lit(2.0) * q(i, j);
            if quad <= T::zero() {
                quad = tau;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < T::zero() {
                alpha[j] = T::zero();
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < T::zero() {
                alpha[i] = T::zero();
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(i, t) * di + q(j, t) * dj;
        }
    }

    // bias: average over free vectors, else midpoint of the feasible interval
    let (mut ub, mut lb) = (T::infinity(), T::neg_infinity());
    let (mut sum_free, mut n_free) = (T::zero(), 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < T::zero() {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= T::zero() {
            if y[t] > T::zero() {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / T::from_count(n_free)
    } else {
        (ub + lb) * T::lit(0.5)
    };

    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for t in 0..n {
        if alpha[t] > T::zero() {
            support_vectors.push(rows[t].clone());
            dual_coef.push(alpha[t] * y[t]);
        }
    }
    Ok(SvmModel {
        gamma: p.gamma,
        c,
        support_vectors,
        dual_coef,
        bias: -rho,
        iterations,
    })
}

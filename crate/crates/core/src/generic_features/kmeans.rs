//! Weighted k-means with k-means++ seeding and multiple restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 5,
            restarts: 20,
            max_iterations: 100,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub centers: Vec<[f64; 3]>,
    /// Cluster index per input point.
    pub assignment: Vec<usize>,
    /// Weighted sum of squared distances to the assigned center.
    pub inertia: f64,
    /// Number of clusters that ended up with at least one point.
    pub nonempty: usize,
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

fn nearest(p: &[f64; 3], centers: &[[f64; 3]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Draws an index with probability proportional to `weights`; `None` if all are zero.
fn weighted_pick(rng: &mut ChaCha8Rng, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut target = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if target < w {
                return Some(i);
            }
            target -= w;
        }
    }
    weights.iter().rposition(|&w| w > 0.0)
}

fn seed_centers(points: &[[f64; 3]], weights: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    let first = weighted_pick(rng, weights).expect("positive total weight");
    let mut centers = vec![points[first]];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &points[first])).collect();
    while centers.len() < k {
        let scores: Vec<f64> = d2.iter().zip(weights).map(|(d, w)| d * w).collect();
        let Some(next) = weighted_pick(rng, &scores) else {
            // every point coincides with a chosen center
            break;
        };
        let c = points[next];
        centers.push(c);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &c));
        }
    }
    centers
}

fn lloyd(points: &[[f64; 3]], weights: &[f64], mut centers: Vec<[f64; 3]>, max_iterations: usize) -> Clustering {
    let k = centers.len();
    let mut assignment = vec![usize::MAX; points.len()];
    for _ in 0..max_iterations {
        let mut changed = false;
        for (a, p) in assignment.iter_mut().zip(points) {
            let (c, _) = nearest(p, &centers);
            if *a != c {
                *a = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![[0.0; 3]; k];
        let mut mass = vec![0.0; k];
        for ((p, &w), &a) in points.iter().zip(weights).zip(&assignment) {
            for d in 0..3 {
                sums[a][d] += w * p[d];
            }
            mass[a] += w;
        }
        for c in 0..k {
            if mass[c] > 0.0 {
                centers[c] = sums[c].map(|s| s / mass[c]);
            } else {
                // re-seed from the point worst served by its center
                let (far, d) = points
                    .iter()
                    .zip(&assignment)
                    .enumerate()
                    .map(|(i, (p, &a))| (i, dist2(p, &centers[a])))
                    .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
                if d > 0.0 {
                    centers[c] = points[far];
                    assignment[far] = c;
                }
            }
        }
    }
    for (a, p) in assignment.iter_mut().zip(points) {
        *a = nearest(p, &centers).0;
    }
    let inertia = points
        .iter()
        .zip(weights)
        .zip(&assignment)
        .map(|((p, w), &a)| w * dist2(p, &centers[a]))
        .sum();
    let mut used = vec![false; k];
    assignment.iter().for_each(|&a| used[a] = true);
    Clustering {
        centers,
        assignment,
        inertia,
        nonempty: used.iter().filter(|&&u| u).count(),
    }
}

/// Clusters weighted points, keeping the restart with the lowest inertia.
/// Restarts use independent seeds derived from `cfg.seed`, so the result
/// does not depend on thread scheduling.
pub fn kmeans(points: &[[f64; 3]], weights: &[f64], cfg: &KMeansConfig) -> Clustering {
    assert_eq!(points.len(), weights.len());
    assert!(!points.is_empty() && cfg.k >= 1);
    (0..cfg.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64);
            let centers = seed_centers(points, weights, cfg.k, &mut rng);
            lloyd(points, weights, centers, cfg.max_iterations)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(|best, c| if c.inertia < best.inertia { c } else { best })
        .expect("at least one restart")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_well_spread_blobs() {
        let mut pts = Vec::new();
        for c in [[0.0, 0.0, 0.0], [50.0, 0.0, 0.0], [0.0, 50.0, 0.0]] {
            for i in 0..10 {
                pts.push([c[0] + i as f64 * 0.1, c[1], c[2] - i as f64 * 0.1]);
            }
        }
        let w = vec![1.0; pts.len()];
        let cfg = KMeansConfig {
            k: 3,
            ..Default::default()
        };
        let c = kmeans(&pts, &w, &cfg);
        assert_eq!(c.nonempty, 3);
        for blob in c.assignment.chunks(10) {
            assert!(blob.iter().all(|&a| a == blob[0]));
        }
        assert_ne!(c.assignment[0], c.assignment[10]);
        assert_ne!(c.assignment[10], c.assignment[20]);
    }

    #[test]
    fn degenerate_input_has_one_cluster() {
        let c = kmeans(&[[1.0, 2.0, 3.0]], &[100.0], &KMeansConfig::default());
        assert_eq!(c.nonempty, 1);
        assert_eq!(c.inertia, 0.0);
    }

    #[test]
    fn deterministic() {
        let pts: Vec<[f64; 3]> = (0..200)
            .map(|i| [(i * 37 % 101) as f64, (i * 13 % 61) as f64, (i % 7) as f64])
            .collect();
        let w = vec![1.0; pts.len()];
        let a = kmeans(&pts, &w, &KMeansConfig::default());
        let b = kmeans(&pts, &w, &KMeansConfig::default());
        assert_eq!(a, b);
        assert_eq!(a.nonempty, 5);
    }

    #[test]
    fn weights_act_like_repetition() {
        let pts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [10.0, 0.0, 0.0]];
        let c = kmeans(
            &pts,
            &[3.0, 1.0, 2.0],
            &KMeansConfig {
                k: 2,
                ..Default::default()
            },
        );
        // {0,1} vs {10}: inertia = 3*0.25^2 + 1*0.75^2
        assert!((c.inertia - 0.75).abs() < 1e-12);
    }
}

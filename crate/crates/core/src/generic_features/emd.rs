//! Earth mover's distance between histograms, solved exactly as a
//! transportation problem by successive shortest augmenting paths.

use std::sync::OnceLock;

use thiserror::Error;

use super::color::rgb_to_luv;
use super::PreprocessedImage;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmdError {
    #[error("cost matrix has {got} entries, expected {expected}")]
    Shape { expected: usize, got: usize },
    #[error("masses and costs must be finite and non-negative")]
    Negative,
    #[error("supply ({supply}) and demand ({demand}) totals differ")]
    Unbalanced { supply: f64, demand: f64 },
}

/// Minimum total cost of moving `supply` onto `demand` where moving one unit
/// from bin `i` to bin `j` costs `cost[i * demand.len() + j]`.
pub fn transport_cost<T: Real>(supply: &[T], demand: &[T], cost: &[T]) -> Result<T, EmdError> {
    let (n, m) = (supply.len(), demand.len());
    if cost.len() != n * m {
        return Err(EmdError::Shape {
            expected: n * m,
            got: cost.len(),
        });
    }
    let bad = |v: &T| !v.is_finite() || *v < T::zero();
    if supply.iter().any(bad) || demand.iter().any(bad) || cost.iter().any(bad) {
        return Err(EmdError::Negative);
    }
    let total_s: T = supply.iter().copied().sum();
    let total_d: T = demand.iter().copied().sum();
    let scale = total_s.max(total_d);
    let eps = scale * T::epsilon() * T::lit(64.0);
    if (total_s - total_d).abs() > scale * T::lit(1e-6).max(T::epsilon() * T::lit(64.0)) {
        return Err(EmdError::Unbalanced {
            supply: total_s.to_f64_lossy(),
            demand: total_d.to_f64_lossy(),
        });
    }
    if scale <= T::zero() {
        return Ok(T::zero());
    }

    let mut rem_s = supply.to_vec();
    let mut rem_d = demand.to_vec();
    let mut flow = vec![T::zero(); n * m];
    // nodes: sources 0..n, sinks n..n+m
    let v = n + m;
    let mut potential = vec![T::zero(); v];
    let inf = T::infinity();
    let mut dist = vec![inf; v];
    let mut pred = vec![usize::MAX; v];
    let mut done = vec![false; v];

    loop {
        if rem_s.iter().all(|&r| r <= eps) {
            break;
        }
        dist.iter_mut().for_each(|d| *d = inf);
        pred.iter_mut().for_each(|p| *p = usize::MAX);
        done.iter_mut().for_each(|d| *d = false);
        for i in 0..n {
            if rem_s[i] > eps {
                dist[i] = T::zero();
            }
        }
        // dense Dijkstra on reduced costs
        loop {
            let mut u = usize::MAX;
            let mut best = inf;
            for k in 0..v {
                if !done[k] && dist[k] < best {
                    best = dist[k];
                    u = k;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < n {
                for j in 0..m {
                    let w = n + j;
                    if done[w] {
                        continue;
                    }
                    let rc = (cost[u * m + j] + potential[u] - potential[w]).max(T::zero());
                    if dist[u] + rc < dist[w] {
                        dist[w] = dist[u] + rc;
                        pred[w] = u;
                    }
                }
            } else {
                let j = u - n;
                for i in 0..n {
                    if done[i] || flow[i * m + j] <= eps {
                        continue;
                    }
                    let rc = (potential[u] - potential[i] - cost[i * m + j]).max(T::zero());
                    if dist[u] + rc < dist[i] {
                        dist[i] = dist[u] + rc;
                        pred[i] = u;
                    }
                }
            }
        }

        let mut target = usize::MAX;
        let mut best = inf;
        for j in 0..m {
            if rem_d[j] > eps && dist[n + j] < best {
                best = dist[n + j];
                target = n + j;
            }
        }
        if target == usize::MAX {
            // remaining mass is below resolution
            break;
        }
        for k in 0..v {
            potential[k] += dist[k].min(best);
        }

        // bottleneck along the path
        let mut amount = rem_d[target - n];
        let mut node = target;
        while pred[node] != usize::MAX {
            let p = pred[node];
            if p >= n {
                // backward arc sink p -> source node
                amount = amount.min(flow[node * m + (p - n)]);
            }
            node = p;
        }
        amount = amount.min(rem_s[node]);

        let start = node;
        let mut node = target;
        while pred[node] != usize::MAX {
            let p = pred[node];
            if p < n {
                flow[p * m + (node - n)] += amount;
            } else {
                let f = &mut flow[node * m + (p - n)];
                *f = (*f - amount).max(T::zero());
            }
            node = p;
        }
        rem_s[start] -= amount;
        rem_d[target - n] -= amount;
    }

    Ok(flow
        .iter()
        .zip(cost.iter())
        .map(|(&f, &c)| f * c)
        .sum())
}

/// Bin of a color in the 4x4x4 RGB cube partition.
pub fn color_bin(rgb: [u8; 3]) -> usize {
    let [r, g, b] = rgb.map(|c| usize::from(c >> 6));
    r * 16 + g * 4 + b
}

pub const COLOR_BINS: usize = 64;

/// Euclidean L*u*v* distances between the centers of the 64 RGB cubes.
pub fn color_bin_costs() -> &'static [f64] {
    static COSTS: OnceLock<Vec<f64>> = OnceLock::new();
    COSTS.get_or_init(|| {
        let centers: Vec<[f64; 3]> = (0..COLOR_BINS)
            .map(|k| {
                let c = |i: usize| (32 + 64 * i) as u8;
                rgb_to_luv([c(k / 16), c((k / 4) % 4), c(k % 4)])
            })
            .collect();
        let mut out = Vec::with_capacity(COLOR_BINS * COLOR_BINS);
        for a in &centers {
            for b in &centers {
                out.push(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt());
            }
        }
        out
    })
}

/// Normalized 64-bin color histogram of the resized image.
pub fn color_histogram(p: &PreprocessedImage) -> [f64; COLOR_BINS] {
    let mut h = [0.0; COLOR_BINS];
    for px in p.rgb.pixels() {
        h[color_bin(px.0)] += 1.0;
    }
    let n = (p.rgb.width() * p.rgb.height()) as f64;
    h.iter_mut().for_each(|v| *v /= n);
    h
}

/// f55: distance from the image's color histogram to the uniform one.
pub fn colorfulness_emd(p: &PreprocessedImage) -> f64 {
    let hist = color_histogram(p);
    let uniform = [1.0 / COLOR_BINS as f64; COLOR_BINS];
    transport_cost(&hist, &uniform, color_bin_costs()).expect("histograms are balanced")
}

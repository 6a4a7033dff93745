//! Gray-level co-occurrence matrix texture statistics.

use super::raster::Plane;
use super::PreprocessedImage;
use crate::scalar::Real;

pub const GLCM_LEVELS: usize = 16;

/// Quantizes values in `[0, 1]` to `levels` gray levels; 1.0 maps to the top level.
pub fn quantize<T: Real>(plane: &Plane<T>, levels: usize) -> Plane<usize> {
    let l = T::from_count(levels);
    plane.map(|v| {
        let q = (v.max(T::zero()) * l).floor().to_usize().unwrap_or(0);
        q.min(levels - 1)
    })
}

/// Symmetric, normalized co-occurrence matrix (`levels x levels`, row-major)
/// for the pixel offset `(dx, dy)`.
pub fn cooccurrence<T: Real>(q: &Plane<usize>, levels: usize, dx: isize, dy: isize) -> Vec<T> {
    let mut counts = vec![0u64; levels * levels];
    let mut pairs = 0u64;
    for y in 0..q.height as isize {
        for x in 0..q.width as isize {
            let (x2, y2) = (x + dx, y + dy);
            if x2 < 0 || y2 < 0 || x2 >= q.width as isize || y2 >= q.height as isize {
                continue;
            }
            let i = q.get(x as usize, y as usize);
            let j = q.get(x2 as usize, y2 as usize);
            counts[i * levels + j] += 1;
            counts[j * levels + i] += 1;
            pairs += 2;
        }
    }
    if pairs == 0 {
        return vec![T::zero(); levels * levels];
    }
    let total = T::from_u64(pairs).expect("pair count");
    counts
        .into_iter()
        .map(|c| T::from_u64(c).expect("count") / total)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlcmStats<T> {
    pub contrast: T,
    /// Zero when either marginal has zero variance.
    pub correlation: T,
    pub homogeneity: T,
    /// Angular second moment, `sum p^2`.
    pub energy: T,
}

pub fn glcm_stats<T: Real>(p: &[T], levels: usize) -> GlcmStats<T> {
    let idx = |i: usize| T::from_count(i);
    let (mut mu_i, mut mu_j) = (T::zero(), T::zero());
    for i in 0..levels {
        for j in 0..levels {
            let v = p[i * levels + j];
            mu_i += idx(i) * v;
            mu_j += idx(j) * v;
        }
    }
    let (mut var_i, mut var_j) = (T::zero(), T::zero());
    let mut contrast = T::zero();
    let mut homogeneity = T::zero();
    let mut energy = T::zero();
    let mut cov = T::zero();
    for i in 0..levels {
        for j in 0..levels {
            let v = p[i * levels + j];
            let (di, dj) = (idx(i) - mu_i, idx(j) - mu_j);
            let d2 = (idx(i) - idx(j)).powi(2);
            var_i += di * di * v;
            var_j += dj * dj * v;
            cov += di * dj * v;
            contrast += d2 * v;
            homogeneity += v / (T::one() + d2);
            energy += v * v;
        }
    }
    let denom = (var_i * var_j).sqrt();
    let correlation = if denom > T::epsilon() {
        cov / denom
    } else {
        T::zero()
    };
    GlcmStats {
        contrast,
        correlation,
        homogeneity,
        energy,
    }
}

/// f72..f83: contrast, correlation, homogeneity, energy for H, then S, then V,
/// at offset (1, 0) with 16 gray levels.
pub fn glcm_features(p: &PreprocessedImage) -> [f64; 12] {
    let mut out = [0.0; 12];
    for (c, plane) in p.hsv_unit_planes().iter().enumerate() {
        let q = quantize(plane, GLCM_LEVELS);
        let m = cooccurrence::<f64>(&q, GLCM_LEVELS, 1, 0);
        let s = glcm_stats(&m, GLCM_LEVELS);
        out[4 * c..4 * c + 4].copy_from_slice(&[s.contrast, s.correlation, s.homogeneity, s.energy]);
    }
    out
}

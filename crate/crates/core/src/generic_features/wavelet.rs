//! Orthonormal 2D Haar transform and the wavelet-based texture and
//! depth-of-field features.

use super::raster::{central_third, Plane};
use super::PreprocessedImage;
use crate::scalar::Real;

/// One decomposition level: the approximation and three detail sub-bands,
/// each `width x height` (half the input size).
#[derive(Debug, Clone)]
pub struct HaarLevel<T> {
    pub approx: Plane<T>,
    /// Row differences (horizontal edges).
    pub lh: Plane<T>,
    /// Column differences (vertical edges).
    pub hl: Plane<T>,
    pub hh: Plane<T>,
}

impl<T: Real> HaarLevel<T> {
    /// Sum of absolute detail coefficients and their count.
    pub fn detail_abs_sum(&self) -> (T, usize) {
        let sum = [&self.lh, &self.hl, &self.hh]
            .iter()
            .flat_map(|p| p.data.iter())
            .map(|v| v.abs())
            .sum();
        (sum, 3 * self.lh.data.len())
    }
}

/// Single-level 2D Haar step. Odd trailing rows/columns are dropped.
pub fn haar_step<T: Real>(input: &Plane<T>) -> HaarLevel<T> {
    let (w, h) = (input.width / 2, input.height / 2);
    let half = T::lit(0.5);
    let mut approx = Plane::filled(w, h, T::zero());
    let mut lh = approx.clone();
    let mut hl = approx.clone();
    let mut hh = approx.clone();
    for y in 0..h {
        for x in 0..w {
            let a = input.get(2 * x, 2 * y);
            let b = input.get(2 * x + 1, 2 * y);
            let c = input.get(2 * x, 2 * y + 1);
            let d = input.get(2 * x + 1, 2 * y + 1);
            approx.set(x, y, (a + b + c + d) * half);
            lh.set(x, y, (a + b - c - d) * half);
            hl.set(x, y, (a - b + c - d) * half);
            hh.set(x, y, (a - b - c + d) * half);
        }
    }
    HaarLevel { approx, lh, hl, hh }
}

/// `levels`-deep decomposition; element 0 is the finest level.
pub fn haar_decompose<T: Real>(input: &Plane<T>, levels: usize) -> Vec<HaarLevel<T>> {
    let mut out: Vec<HaarLevel<T>> = Vec::with_capacity(levels);
    for _ in 0..levels {
        let next = haar_step(out.last().map_or(input, |l| &l.approx));
        out.push(next);
    }
    out
}

/// Mean absolute detail coefficient at each level.
pub fn level_textures<T: Real>(plane: &Plane<T>, levels: usize) -> Vec<T> {
    haar_decompose(plane, levels)
        .iter()
        .map(|l| {
            let (sum, n) = l.detail_abs_sum();
            if n == 0 {
                T::zero()
            } else {
                sum / T::from_count(n)
            }
        })
        .collect()
}

/// Share of the coarsest-level detail energy inside the central third
/// window. `0` when the channel has no detail at that level.
pub fn center_detail_ratio<T: Real>(plane: &Plane<T>, levels: usize) -> T {
    let coarse = haar_decompose(plane, levels).pop().expect("levels >= 1");
    let (xs, ys) = (central_third(coarse.lh.width), central_third(coarse.lh.height));
    let mut inner = T::zero();
    let mut total = T::zero();
    for y in 0..coarse.lh.height {
        for x in 0..coarse.lh.width {
            let m = coarse.lh.get(x, y).abs() + coarse.hl.get(x, y).abs() + coarse.hh.get(x, y).abs();
            total += m;
            if xs.contains(&x) && ys.contains(&y) {
                inner += m;
            }
        }
    }
    if total > T::zero() {
        inner / total
    } else {
        T::zero()
    }
}

pub const WAVELET_LEVELS: usize = 3;

/// f14..f25: per-level textures for H, S and V (levels 1..3 each), then the
/// per-channel sums over levels.
pub fn wavelet_texture(p: &PreprocessedImage) -> [f64; 12] {
    let mut out = [0.0; 12];
    for (c, plane) in p.hsv_unit_planes().iter().enumerate() {
        let t = level_textures(plane, WAVELET_LEVELS);
        out[3 * c..3 * c + 3].copy_from_slice(&t);
        out[9 + c] = t.iter().sum();
    }
    out
}

/// f49..f51: low depth-of-field indicator per H, S, V channel.
pub fn low_dof(p: &PreprocessedImage) -> [f64; 3] {
    p.hsv_unit_planes()
        .map(|plane| center_detail_ratio(&plane, WAVELET_LEVELS))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(w: usize, h: usize, f: impl FnMut(usize, usize) -> f64) -> Plane<f64> {
        Plane::from_fn(w, h, f)
    }

    #[test]
    fn constant_has_no_detail() {
        let p = plane(16, 16, |_, _| 0.7);
        assert!(level_textures(&p, 3).iter().all(|&t| t == 0.0));
        assert_eq!(center_detail_ratio(&p, 3), 0.0);
    }

    #[test]
    fn single_pixel_direct_evaluation() {
        let p = plane(8, 8, |x, y| if x == 3 && y == 2 { 1.0 } else { 0.0 });
        let levels = haar_decompose(&p, 3);
        // pixel (3,2) is the top-right of block (1,1): a=0, b=1, c=0, d=0
        assert_eq!(levels[0].approx.get(1, 1), 0.5);
        assert_eq!(levels[0].lh.get(1, 1), 0.5);
        assert_eq!(levels[0].hl.get(1, 1), -0.5);
        assert_eq!(levels[0].hh.get(1, 1), -0.5);
        let t = level_textures(&p, 3);
        assert!((t[0] - 1.5 / 48.0).abs() < 1e-15);
        assert!(t[1] > 0.0 && t[2] > 0.0);
    }

    #[test]
    fn checkerboard_energy_at_finest_level() {
        let p = plane(8, 8, |x, y| ((x + y) % 2) as f64);
        let t = level_textures(&p, 3);
        // each 2x2 block is [[0,1],[1,0]]: only HH = -1
        assert!((t[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!(t[1].abs() < 1e-15 && t[2].abs() < 1e-15);
    }

    #[test]
    fn energy_is_preserved() {
        let p = plane(8, 8, |x, y| ((x * 7 + y * 3) % 5) as f64 / 4.0);
        let l = haar_step(&p);
        let e_in: f64 = p.data.iter().map(|v| v * v).sum();
        let e_out: f64 = [&l.approx, &l.lh, &l.hl, &l.hh]
            .iter()
            .flat_map(|q| q.data.iter())
            .map(|v| v * v)
            .sum();
        assert!((e_in - e_out).abs() < 1e-12);
    }

    #[test]
    fn center_ratio_extremes() {
        // level-3 coefficients are 16x16, central window 5..11 -> pixels 40..88
        let center = plane(128, 128, |x, y| {
            if (48..80).contains(&x) && (48..80).contains(&y) {
                (((x / 4) + (y / 4)) % 2) as f64
            } else {
                0.0
            }
        });
        assert!((center_detail_ratio(&center, 3) - 1.0).abs() < 1e-12);

        let border = plane(128, 128, |x, y| {
            if x < 16 || y < 16 {
                (((x / 4) + (y / 4)) % 2) as f64
            } else {
                0.0
            }
        });
        assert_eq!(center_detail_ratio(&border, 3), 0.0);
    }

    #[test]
    fn works_in_f32() {
        let p: Plane<f32> = Plane::from_fn(8, 8, |x, y| ((x + y) % 2) as f32);
        let t = level_textures(&p, 3);
        assert!((t[0] - 1.0 / 3.0).abs() < 1e-6);
    }
}

//! Global color statistics: means, image size, PAD emotion and named colors.

use super::color::circular_mean_deg;
use super::raster::central_third;
use super::PreprocessedImage;

/// Mean (V, S, H) over the pixels accepted by `keep`; hue in degrees.
fn mean_vsh(p: &PreprocessedImage, keep: impl Fn(usize, usize) -> bool) -> [f64; 3] {
    let (mut v, mut s, mut hc, mut hs, mut n) = (0.0, 0.0, 0.0, 0.0, 0usize);
    for y in 0..p.hsv.height {
        for x in 0..p.hsv.width {
            if !keep(x, y) {
                continue;
            }
            let [h, sat, val] = p.hsv.get(x, y);
            v += val;
            s += sat;
            let r = h.to_radians();
            hc += r.cos();
            hs += r.sin();
            n += 1;
        }
    }
    let n = n as f64;
    [v / n, s / n, circular_mean_deg(hc, hs)]
}

/// f8..f13: mean V, S, H of the whole image, then of the central third crop.
pub fn color_stats(p: &PreprocessedImage) -> [f64; 6] {
    let whole = mean_vsh(p, |_, _| true);
    let (xs, ys) = (central_third(p.hsv.width), central_third(p.hsv.height));
    let center = mean_vsh(p, |x, y| xs.contains(&x) && ys.contains(&y));
    [whole[0], whole[1], whole[2], center[0], center[1], center[2]]
}

/// f26, f27: `w + h` and `w / h` of the original image.
pub fn image_size(width: u32, height: u32) -> [f64; 2] {
    let (w, h) = (f64::from(width), f64::from(height));
    [w + h, w / h]
}

/// Pleasure, arousal, dominance as linear forms of mean V and mean S.
pub fn pad(mean_v: f64, mean_s: f64) -> [f64; 3] {
    [
        0.69 * mean_v + 0.22 * mean_s,
        -0.31 * mean_v + 0.60 * mean_s,
        0.76 * mean_v + 0.32 * mean_s,
    ]
}

/// f52..f54.
pub fn emotion_pad(p: &PreprocessedImage) -> [f64; 3] {
    let [v, s, _] = mean_vsh(p, |_, _| true);
    pad(v, s)
}

pub const PALETTE_NAMES: [&str; 16] = [
    "black", "silver", "gray", "white", "maroon", "red", "purple", "fuchsia", "green", "lime", "olive", "yellow",
    "navy", "aqua", "blue", "teal",
];

pub const PALETTE: [[u8; 3]; 16] = [
    [0, 0, 0],
    [192, 192, 192],
    [128, 128, 128],
    [255, 255, 255],
    [128, 0, 0],
    [255, 0, 0],
    [128, 0, 128],
    [255, 0, 255],
    [0, 128, 0],
    [0, 255, 0],
    [128, 128, 0],
    [255, 255, 0],
    [0, 0, 128],
    [0, 255, 255],
    [0, 0, 255],
    [0, 128, 128],
];

/// Index of the nearest palette entry in RGB; ties go to the earlier entry.
pub fn nearest_palette(rgb: [u8; 3]) -> usize {
    let d = |c: &[u8; 3]| -> i32 { (0..3).map(|i| (i32::from(rgb[i]) - i32::from(c[i])).pow(2)).sum() };
    let mut best = 0;
    for (i, c) in PALETTE.iter().enumerate().skip(1) {
        if d(c) < d(&PALETTE[best]) {
            best = i;
        }
    }
    best
}

/// f56..f71: fraction of pixels nearest to each palette color.
pub fn color_names(p: &PreprocessedImage) -> [f64; 16] {
    let mut counts = [0usize; 16];
    for px in p.rgb.pixels() {
        counts[nearest_palette(px.0)] += 1;
    }
    let n = counts.iter().sum::<usize>() as f64;
    counts.map(|c| c as f64 / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_examples() {
        assert_eq!(image_size(128, 128), [256.0, 1.0]);
        let [s, r] = image_size(640, 480);
        assert_eq!(s, 1120.0);
        assert!((r - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(image_size(480, 640), [1120.0, 0.75]);
    }

    #[test]
    fn pad_linear_forms() {
        assert_eq!(pad(0.0, 0.0), [0.0, 0.0, 0.0]);
        assert_eq!(pad(1.0, 0.0), [0.69, -0.31, 0.76]);
        let [p, a, d] = pad(1.0, 1.0);
        assert!((p - 0.91).abs() < 1e-12);
        assert!((a - 0.29).abs() < 1e-12);
        assert!((d - 1.08).abs() < 1e-12);
    }

    #[test]
    fn palette_is_fixed_points() {
        for (i, c) in PALETTE.iter().enumerate() {
            assert_eq!(nearest_palette(*c), i, "{}", PALETTE_NAMES[i]);
        }
        assert_eq!(nearest_palette([250, 5, 5]), 5);
    }
}

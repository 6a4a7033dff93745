use image::{Rgb, RgbImage};

use super::emd::{color_bin, color_bin_costs, COLOR_BINS};
use super::*;

fn cfg() -> GenericConfig {
    GenericConfig::default()
}

fn solid(w: u32, h: u32, c: [u8; 3]) -> RgbImage {
    RgbImage::from_pixel(w, h, Rgb(c))
}

fn prep(img: &RgbImage) -> PreprocessedImage {
    preprocess_rgb(img, &cfg()).unwrap()
}

fn png(img: &RgbImage) -> Vec<u8> {
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png).unwrap();
    buf.into_inner()
}

#[test]
fn resize_rules() {
    let p = prep(&solid(256, 256, [10, 20, 30]));
    assert_eq!(p.rgb.dimensions(), (128, 128));
    assert_eq!((p.original_width, p.original_height), (256, 256));
    assert_eq!(p.hsv.data.len(), 128 * 128);
    let src = RgbImage::from_fn(128, 128, |x, y| Rgb([x as u8, y as u8, 7]));
    assert_eq!(prep(&src).rgb, src);
}

#[test]
fn rejects_tiny_and_garbage() {
    assert!(matches!(
        preprocess_rgb(&solid(7, 100, [0, 0, 0]), &cfg()),
        Err(FeatureError::TooSmall { width: 7, height: 100 })
    ));
    assert!(matches!(preprocess(b"not an image", &cfg()), Err(FeatureError::Decode(_))));
    assert!(preprocess(&png(&solid(8, 8, [1, 2, 3])), &cfg()).is_ok());
}

#[test]
fn uniform_gray_is_one_cluster() {
    let p = prep(&solid(64, 64, [128, 128, 128]));
    assert_eq!(p.kmeans_clusters, 1);
    assert!(p.kmeans_labels.data.iter().all(|&l| l == 1));
}

#[test]
fn color_stat_examples() {
    let white = stats::color_stats(&prep(&solid(32, 32, [255, 255, 255])));
    assert_eq!((white[0], white[1]), (1.0, 0.0));
    let red = stats::color_stats(&prep(&solid(32, 32, [255, 0, 0])));
    assert_eq!((red[1], red[2]), (1.0, 0.0));
    let halves = RgbImage::from_fn(128, 128, |x, _| if x < 64 { Rgb([0; 3]) } else { Rgb([255; 3]) });
    assert_eq!(stats::color_stats(&prep(&halves))[0], 0.5);
}

#[test]
fn center_stats_use_the_central_third() {
    // bright only inside rows/cols 42..86
    let img = RgbImage::from_fn(128, 128, |x, y| {
        if (42..86).contains(&x) && (42..86).contains(&y) {
            Rgb([255; 3])
        } else {
            Rgb([0; 3])
        }
    });
    let s = stats::color_stats(&prep(&img));
    assert_eq!(s[3], 1.0);
    assert!((s[0] - 44.0 * 44.0 / 16384.0).abs() < 1e-12);
}

#[test]
fn region_examples() {
    let uniform = segmentation::region_features(&prep(&solid(128, 128, [40, 90, 200])));
    assert_eq!(uniform[0], 1.0);
    assert_eq!(&uniform[16..], &[1.0, 0.0, 0.0, 0.0, 0.0]);

    let halves = RgbImage::from_fn(128, 128, |x, _| if x < 64 { Rgb([255, 0, 0]) } else { Rgb([0, 0, 255]) });
    let r = segmentation::region_features(&prep(&halves));
    assert_eq!(r[0], 2.0);
    assert_eq!((r[16], r[17]), (0.5, 0.5));
    // first region (scan order tie-break) is the red one
    assert_eq!((r[1], r[2], r[3]), (0.0, 1.0, 1.0));
    assert!((r[4] - 240.0).abs() < 1e-9);

    let colors = [[255, 0, 0], [0, 255, 0], [0, 0, 255], [255, 255, 0], [0, 0, 0]];
    let stripes = RgbImage::from_fn(160, 128, |x, _| Rgb(colors[x as usize / 32]));
    let s = segmentation::region_features(&prep(&stripes));
    // resampling blends the stripe borders, so areas are close to but not exactly 1/5
    assert_eq!(s[0], 5.0);
    let exact = RgbImage::from_fn(128, 128, |x, _| Rgb(colors[(x as usize * 5) / 128]));
    let e = segmentation::region_features(&prep(&exact));
    for a in &e[16..21] {
        assert!((a - 0.2).abs() < 0.01, "{a}");
    }
    let stripe_areas = [26.0, 25.0, 26.0, 25.0, 26.0];
    let mut got: Vec<f64> = e[16..21].iter().map(|a| a * 128.0).collect();
    got.sort_by(f64::total_cmp);
    let mut want = stripe_areas.to_vec();
    want.sort_by(f64::total_cmp);
    assert_eq!(got, want);
}

#[test]
fn level_of_detail_examples() {
    assert_eq!(segmentation::level_of_detail(&prep(&solid(128, 128, [9, 9, 9]))), 1.0);
    let halves = RgbImage::from_fn(128, 128, |x, _| if x < 64 { Rgb([20; 3]) } else { Rgb([230; 3]) });
    let p = prep(&halves);
    assert_eq!(segmentation::level_of_detail(&p), 2.0);
    let mut ids = p.waterfall_segments.data.clone();
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(ids.len() as f64, segmentation::level_of_detail(&p));
}

/// Image with each 16x16 block painted in a distinct RGB cube.
fn all_bins_image() -> RgbImage {
    RgbImage::from_fn(128, 128, |x, y| {
        let k = (y / 16 * 8 + x / 16) as usize;
        let c = |i: usize| (32 + 64 * i) as u8;
        Rgb([c(k / 16), c((k / 4) % 4), c(k % 4)])
    })
}

#[test]
fn colorfulness_examples() {
    let spread = prep(&all_bins_image());
    assert!(emd::color_histogram(&spread).iter().all(|&v| v == 1.0 / 64.0));
    assert!(emd::colorfulness_emd(&spread).abs() < 1e-12);

    // one source bin must ship 1/64 to every bin
    let single = prep(&solid(128, 128, [200, 30, 90]));
    let bin = color_bin([200, 30, 90]);
    let oracle: f64 = (0..COLOR_BINS).map(|j| color_bin_costs()[bin * COLOR_BINS + j]).sum::<f64>() / 64.0;
    let single_d = emd::colorfulness_emd(&single);
    assert!((single_d - oracle).abs() < 1e-9);

    let two = RgbImage::from_fn(128, 128, |x, _| if x < 64 { Rgb([200, 30, 90]) } else { Rgb([200, 30, 160]) });
    let two_d = emd::colorfulness_emd(&prep(&two));
    assert!(two_d > 0.0 && two_d < single_d);
}

#[test]
fn color_name_examples() {
    let black = stats::color_names(&prep(&solid(16, 16, [0, 0, 0])));
    assert_eq!(black[0], 1.0);
    assert_eq!(black.iter().sum::<f64>(), 1.0);
    let img = RgbImage::from_fn(128, 128, |x, _| if x < 64 { Rgb([255, 0, 0]) } else { Rgb([255; 3]) });
    let n = stats::color_names(&prep(&img));
    assert_eq!((n[5], n[3]), (0.5, 0.5));
}

#[test]
fn line_examples() {
    let lc = LineConfig::default();
    assert_eq!(lines::dynamics_lines(&prep(&solid(128, 128, [50; 3])), &lc), [0.0; 6]);

    let horizontal = RgbImage::from_fn(128, 128, |x, y| {
        if (16..112).contains(&x) && (60..64).contains(&y) {
            Rgb([255; 3])
        } else {
            Rgb([0; 3])
        }
    });
    let h = lines::dynamics_lines(&prep(&horizontal), &lc);
    assert!(h[2] > 0.0);
    assert_eq!(&h[3..], &[0.0; 3]);

    let diagonal = RgbImage::from_fn(128, 128, |x, y| {
        if (16..112).contains(&x) && (x as i32 - y as i32).abs() <= 2 {
            Rgb([255; 3])
        } else {
            Rgb([0; 3])
        }
    });
    let d = lines::dynamics_lines(&prep(&diagonal), &lc);
    assert!((d[3] - 45.0).abs() <= 3.0, "{d:?}");
    assert!(d[5] > 0.0);
}

#[test]
fn constant_image_analytic_slots() {
    let v = extract_generic(&png(&solid(100, 60, [70, 140, 210])), &cfg()).unwrap();
    for slot in 14..=25 {
        assert_eq!(v.slot(slot), 0.0, "wavelet slot {slot}");
    }
    assert_eq!(v.slot(26), 160.0);
    assert_eq!(v.slot(28), 1.0);
    assert_eq!(v.slot(44), 1.0);
    assert_eq!((v.slot(49), v.slot(50), v.slot(51)), (0.0, 0.0, 0.0));
    for c in 0..3 {
        let base = 72 + 4 * c;
        assert_eq!(v.slot(base), 0.0);
        assert_eq!(v.slot(base + 1), 0.0);
        assert_eq!(v.slot(base + 2), 1.0);
        assert_eq!(v.slot(base + 3), 1.0);
    }
    let names: f64 = (56..=71).map(|s| v.slot(s)).sum();
    assert!((names - 1.0).abs() < 1e-9);
    assert_eq!(v.slot(90), 1.0);
}

#[test]
fn names_are_unique() {
    let names = generic_feature_names();
    let mut sorted = names.to_vec();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), GENERIC_COUNT);
}

#[test]
fn extraction_is_deterministic() {
    let img = RgbImage::from_fn(90, 70, |x, y| Rgb([(x * 3) as u8, (y * 5) as u8, ((x * y) % 251) as u8]));
    let bytes = png(&img);
    let a = extract_generic(&bytes, &cfg()).unwrap();
    let b = extract_generic(&bytes, &cfg()).unwrap();
    assert_eq!(a, b);
    assert!(a.0.iter().all(|v| v.is_finite()));
}


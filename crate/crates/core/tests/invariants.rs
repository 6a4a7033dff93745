use grouphoto::dataset::{aggregate, binarize, DatasetConfig, Rating, Source, Store};
use grouphoto::features::feature_names;
use grouphoto::generic_features::{generic_features, preprocess_rgb, GenericConfig};
use grouphoto::ml::forest::{Forest, ForestParams};
use grouphoto::ml::metrics::auc;
use grouphoto::ml::{fit_classifier, fit_regressor, MlConfig, Selection};
use image::{Rgb, RgbImage};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn slot(name: &str) -> usize {
    feature_names().iter().position(|n| n == name).unwrap() - 7
}

/// Blocky random image: smooth enough to segment, busy enough to texture.
fn blocky(seed: u64, w: u32, h: u32, block: u32) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = w.div_ceil(block) as usize;
    let palette: Vec<[u8; 3]> = (0..cols * h.div_ceil(block) as usize).map(|_| rng.gen()).collect();
    RgbImage::from_fn(w, h, |x, y| Rgb(palette[(y / block) as usize * cols + (x / block) as usize]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generic_features_stay_in_range(seed in any::<u64>(), w in 16u32..72, h in 16u32..72, block in 1u32..12) {
        let cfg = GenericConfig::default();
        let p = preprocess_rgb(&blocky(seed, w, h, block), &cfg).unwrap();
        let g = generic_features(&p, &cfg);
        let again = generic_features(&preprocess_rgb(&blocky(seed, w, h, block), &cfg).unwrap(), &cfg);
        prop_assert!(g.0.iter().zip(&again.0).all(|(a, b)| a.to_bits() == b.to_bits()));
        for c in ["h", "s", "v"] {
            for l in ["1", "2", "3", "_sum"] {
                let texture = g.0[slot(&format!("wavelet_{c}{l}"))];
                prop_assert!(texture >= 0.0);
            }
            let energy = g.0[slot(&format!("glcm_{c}_energy"))];
            let homogeneity = g.0[slot(&format!("glcm_{c}_homogeneity"))];
            prop_assert!(energy > 0.0 && energy <= 1.0);
            prop_assert!(homogeneity > 0.0 && homogeneity <= 1.0);
            let contrast = g.0[slot(&format!("glcm_{c}_contrast"))];
            prop_assert!(contrast >= 0.0);
            let dof = g.0[slot(&format!("low_dof_{c}"))];
            prop_assert!((0.0..=1.0).contains(&dof));
        }
        let names: f64 = feature_names()
            .iter()
            .enumerate()
            .filter(|(_, n)| n.starts_with("color_"))
            .map(|(i, _)| g.0[i - 7])
            .sum();
        prop_assert!((names - 1.0).abs() <= 1e-9);
    }
}

proptest! {
    #[test]
    fn forest_predictions_stay_within_training_labels(
        seed in any::<u64>(),
        n in 5usize..40,
        probe in proptest::collection::vec(-5.0f64..5.0, 4),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let params = ForestParams { trees: 8, seed, ..ForestParams::default() };
        let forest = Forest::train(&rows, &y, &params).unwrap();
        let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for r in rows.iter().chain(std::iter::once(&probe)) {
            let p = forest.predict(r).unwrap();
            prop_assert!(p >= lo - 1e-9 && p <= hi + 1e-9, "{p} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn auc_equals_pairwise_probability(points in proptest::collection::vec((0u8..5, any::<bool>()), 2..=12)) {
        prop_assume!(points.iter().any(|p| p.1) && points.iter().any(|p| !p.1));
        let scores: Vec<f64> = points.iter().map(|p| f64::from(p.0)).collect();
        let positive: Vec<bool> = points.iter().map(|p| p.1).collect();
        let (mut wins, mut pairs) = (0.0, 0.0);
        for (sp, _) in points.iter().filter(|p| p.1) {
            for (sn, _) in points.iter().filter(|p| !p.1) {
                pairs += 1.0;
                wins += match sp.cmp(sn) {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Less => 0.0,
                };
            }
        }
        prop_assert!((auc(&scores, &positive).unwrap() - wins / pairs).abs() < 1e-12);
    }

    #[test]
    fn label_ignores_rating_order(scores in proptest::collection::vec(1u8..=10, 5..=20), seed in any::<u64>()) {
        let mut shuffled = scores.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (a, b) = (aggregate(&scores, 5).unwrap(), aggregate(&shuffled, 5).unwrap());
        prop_assert_eq!(a.to_bits(), b.to_bits());
        prop_assert_eq!(binarize(a, 6.0), binarize(b, 6.0));
    }
}

#[test]
fn ratings_past_the_cap_are_kept_and_flagged() {
    let mut store = Store::in_memory(DatasetConfig::default());
    let id = store.add_photo(None, "p.png", Source::Internet).unwrap();
    for k in 1..=25 {
        let ack = store
            .append_rating(Rating {
                photo_id: id.clone(),
                rater_id: format!("r{k}"),
                score: 7,
                timestamp: k,
            })
            .unwrap();
        assert_eq!(ack.count, k as usize);
        assert_eq!(ack.over_cap, k > 20);
    }
    assert_eq!(store.data().rating_count(), 25);
}

#[test]
fn training_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<f64>> = (0..60).map(|_| (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let labels: Vec<bool> = rows.iter().map(|r| r[0] > 0.0).collect();
    let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[1] + r[2]).collect();
    let cfg = MlConfig::default();
    let c1 = fit_classifier(&rows, &labels, Selection::Filter { k: 4 }, &cfg, None).unwrap();
    let c2 = fit_classifier(&rows, &labels, Selection::Filter { k: 4 }, &cfg, None).unwrap();
    assert_eq!(c1.to_bytes(), c2.to_bytes());
    let r1 = fit_regressor(&rows, &y, Selection::Rfe { k: 3 }, &cfg, None).unwrap();
    let r2 = fit_regressor(&rows, &y, Selection::Rfe { k: 3 }, &cfg, None).unwrap();
    assert_eq!(r1.to_bytes(), r2.to_bytes());
}

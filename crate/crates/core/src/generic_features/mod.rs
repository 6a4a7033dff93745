//! Photo-level aesthetic features (slots f8..f90) computed on a 128x128
//! resampled copy of the image.

pub mod color;
pub mod emd;
pub mod glcm;
pub mod kmeans;
pub mod lines;
pub mod raster;
pub mod segmentation;
pub mod stats;
pub mod wavelet;

use std::sync::OnceLock;

use image::imageops::FilterType;
use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use self::kmeans::KMeansConfig;
use self::lines::LineConfig;
use self::raster::Plane;

pub const WORKING_SIZE: u32 = 128;
pub const MIN_INPUT_SIZE: u32 = 8;
pub const GENERIC_COUNT: usize = 83;
/// Slot number of the first generic feature.
pub const FIRST_SLOT: usize = 8;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot decode image: {0}")]
    Decode(#[from] image::ImageError),
    #[error("image is {width}x{height}, both sides must be at least {MIN_INPUT_SIZE}")]
    TooSmall { width: u32, height: u32 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenericConfig {
    pub kmeans: KMeansConfig,
    pub lines: LineConfig,
}

#[derive(Debug, Clone)]
pub struct PreprocessedImage {
    pub original_width: u32,
    pub original_height: u32,
    pub rgb: RgbImage,
    /// H in degrees `[0, 360)`, S and V in `[0, 1]`.
    pub hsv: Plane<[f64; 3]>,
    pub luv: Plane<[f64; 3]>,
    /// Cluster id per pixel, `1..=kmeans_clusters`.
    pub kmeans_labels: Plane<u32>,
    /// Clusters actually used; below `k` when the image has too few colors.
    pub kmeans_clusters: usize,
    /// Segment id per pixel, starting at 1.
    pub waterfall_segments: Plane<u32>,
}

impl PreprocessedImage {
    /// H/360, S and V as separate planes, all in `[0, 1]`.
    pub fn hsv_unit_planes(&self) -> [Plane<f64>; 3] {
        [
            self.hsv.map(|p| p[0] / 360.0),
            self.hsv.map(|p| p[1]),
            self.hsv.map(|p| p[2]),
        ]
    }
}

pub fn preprocess(bytes: &[u8], cfg: &GenericConfig) -> Result<PreprocessedImage, FeatureError> {
    let img = image::load_from_memory(bytes)?.to_rgb8();
    preprocess_rgb(&img, cfg)
}

pub fn preprocess_rgb(img: &RgbImage, cfg: &GenericConfig) -> Result<PreprocessedImage, FeatureError> {
    let (width, height) = img.dimensions();
    if width < MIN_INPUT_SIZE || height < MIN_INPUT_SIZE {
        return Err(FeatureError::TooSmall { width, height });
    }
    let rgb = if (width, height) == (WORKING_SIZE, WORKING_SIZE) {
        img.clone()
    } else {
        image::imageops::resize(img, WORKING_SIZE, WORKING_SIZE, FilterType::Triangle)
    };
    let n = WORKING_SIZE as usize;
    let px = |x: usize, y: usize| rgb.get_pixel(x as u32, y as u32).0;
    let hsv = Plane::from_fn(n, n, |x, y| color::rgb_to_hsv(px(x, y)));
    let luv = Plane::from_fn(n, n, |x, y| color::rgb_to_luv(px(x, y)));

    // cluster distinct colors weighted by their pixel counts
    let mut colors: Vec<[u8; 3]> = rgb.pixels().map(|p| p.0).collect();
    colors.sort_unstable();
    let mut unique: Vec<[u8; 3]> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for c in colors {
        if unique.last() == Some(&c) {
            *weights.last_mut().expect("parallel vectors") += 1.0;
        } else {
            unique.push(c);
            weights.push(1.0);
        }
    }
    let points: Vec<[f64; 3]> = unique.iter().map(|&c| color::rgb_to_luv(c)).collect();
    let clustering = kmeans::kmeans(&points, &weights, &cfg.kmeans);
    let mut compact = vec![0u32; clustering.centers.len()];
    let mut used = vec![false; clustering.centers.len()];
    clustering.assignment.iter().for_each(|&a| used[a] = true);
    let mut next = 0;
    for (c, u) in used.iter().enumerate() {
        if *u {
            next += 1;
            compact[c] = next;
        }
    }
    let kmeans_labels = Plane::from_fn(n, n, |x, y| {
        let i = unique.binary_search(&px(x, y)).expect("color was indexed");
        compact[clustering.assignment[i]]
    });
    let waterfall_segments = segmentation::waterfall(&segmentation::segmentation_gradient(&hsv));

    Ok(PreprocessedImage {
        original_width: width,
        original_height: height,
        rgb,
        hsv,
        luv,
        kmeans_labels,
        kmeans_clusters: clustering.nonempty,
        waterfall_segments,
    })
}

/// Values of f8..f90 in slot order.
#[derive(Debug, Clone, PartialEq)]
pub struct GenericFeatureVector(pub [f64; GENERIC_COUNT]);

impl GenericFeatureVector {
    /// Value of slot `f{slot}`, for slots 8..=90.
    pub fn slot(&self, slot: usize) -> f64 {
        self.0[slot - FIRST_SLOT]
    }

    pub fn names() -> &'static [String] {
        generic_feature_names()
    }
}

/// Descriptive names of f8..f90, in slot order.
pub fn generic_feature_names() -> &'static [String] {
    static NAMES: OnceLock<Vec<String>> = OnceLock::new();
    NAMES.get_or_init(|| {
        let mut v: Vec<String> = Vec::with_capacity(GENERIC_COUNT);
        for scope in ["", "center_"] {
            for c in ["v", "s", "h"] {
                v.push(format!("{scope}mean_{c}"));
            }
        }
        for c in ["h", "s", "v"] {
            for l in 1..=3 {
                v.push(format!("wavelet_{c}{l}"));
            }
        }
        for c in ["h", "s", "v"] {
            v.push(format!("wavelet_{c}_sum"));
        }
        v.push("size_sum".into());
        v.push("aspect_ratio".into());
        v.push("region_count".into());
        for r in 1..=5 {
            for c in ["h", "s", "v"] {
                v.push(format!("region{r}_{c}"));
            }
        }
        for r in 1..=5 {
            v.push(format!("region{r}_area"));
        }
        for c in ["h", "s", "v"] {
            v.push(format!("low_dof_{c}"));
        }
        v.extend(["pleasure", "arousal", "dominance", "colorfulness"].map(String::from));
        v.extend(stats::PALETTE_NAMES.map(|n| format!("color_{n}")));
        for c in ["h", "s", "v"] {
            for s in ["contrast", "correlation", "homogeneity", "energy"] {
                v.push(format!("glcm_{c}_{s}"));
            }
        }
        for kind in ["static", "dynamic"] {
            for s in ["abs_angle", "rel_angle", "length"] {
                v.push(format!("{kind}_lines_{s}"));
            }
        }
        v.push("segment_count".into());
        assert_eq!(v.len(), GENERIC_COUNT);
        v
    })
}

/// All generic features of an already preprocessed image.
pub fn generic_features(p: &PreprocessedImage, cfg: &GenericConfig) -> GenericFeatureVector {
    let mut out = Vec::with_capacity(GENERIC_COUNT);
    out.extend(stats::color_stats(p));
    out.extend(wavelet::wavelet_texture(p));
    out.extend(stats::image_size(p.original_width, p.original_height));
    out.extend(segmentation::region_features(p));
    out.extend(wavelet::low_dof(p));
    out.extend(stats::emotion_pad(p));
    out.push(emd::colorfulness_emd(p));
    out.extend(stats::color_names(p));
    out.extend(glcm::glcm_features(p));
    out.extend(lines::dynamics_lines(p, &cfg.lines));
    out.push(segmentation::level_of_detail(p));
    GenericFeatureVector(out.try_into().expect("83 generic features"))
}

pub fn extract_generic(bytes: &[u8], cfg: &GenericConfig) -> Result<GenericFeatureVector, FeatureError> {
    Ok(generic_features(&preprocess(bytes, cfg)?, cfg))
}

#[cfg(test)]
mod tests;

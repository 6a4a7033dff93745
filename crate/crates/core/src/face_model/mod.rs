//! Per-person face metadata and the predicates evaluated on it.
//!
//! A photo is described by a [`FaceSequence`]: one [`FaceInfo`] per detected
//! person, as reported by an external face-analysis service. The predicates
//! on [`FaceInfo`] turn that metadata into the binary flags consumed by
//! [`crate::group_features`].

mod provider;
mod schema;

pub use provider::{fetch_faces, sidecar_path, FaceProvider, HttpProviderConfig};
pub use schema::{parse_face_annotations, to_annotation_json};

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum FaceError {
    #[error("face annotation document is not valid JSON: {0}")]
    Json(#[source] serde_json::Error),
    #[error("face annotation schema violation at {location}: {message}")]
    Schema { location: String, message: String },
    #[error("face {index}: field `{field}` {message}")]
    Validation {
        index: usize,
        field: &'static str,
        message: String,
    },
    #[error("invalid frame size {width}x{height}")]
    Frame { width: f64, height: f64 },
    #[error("missing face annotation: expected sidecar at {}", .0.display())]
    MissingAnnotation(PathBuf),
    #[error("face service request failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A 2D point or vector in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    fn midpoint(self, other: Self) -> Self {
        let two = T::lit(2.0);
        Self::new((self.x + other.x) / two, (self.y + other.y) / two)
    }
}

/// Axis-aligned rectangle; `(x, y)` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rect<T> {
    pub x: T,
    pub y: T,
    pub w: T,
    pub h: T,
}

impl<T: Real> Rect<T> {
    pub fn new(x: T, y: T, w: T, h: T) -> Self {
        Self { x, y, w, h }
    }

    /// Closed containment test: points on the edge are inside.
    pub fn contains(&self, p: Point2<T>) -> bool {
        p.x >= self.x && p.x <= self.x + self.w && p.y >= self.y && p.y <= self.y + self.h
    }

    pub fn center(&self) -> Point2<T> {
        let two = T::lit(2.0);
        Point2::new(self.x + self.w / two, self.y + self.h / two)
    }

    /// Same center, width and height scaled by `factor`.
    pub fn expanded(&self, factor: T) -> Self {
        let c = self.center();
        let (w, h) = (self.w * factor, self.h * factor);
        let two = T::lit(2.0);
        Self::new(c.x - w / two, c.y - h / two, w, h)
    }
}

/// The six eye states, in the order their confidences are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EyeState {
    OpenNoGlasses = 1,
    OpenGlasses = 2,
    Sunglasses = 3,
    Covered = 4,
    ClosedNoGlasses = 5,
    ClosedGlasses = 6,
}

impl EyeState {
    const ALL: [EyeState; 6] = [
        EyeState::OpenNoGlasses,
        EyeState::OpenGlasses,
        EyeState::Sunglasses,
        EyeState::Covered,
        EyeState::ClosedNoGlasses,
        EyeState::ClosedGlasses,
    ];

    /// 1-based state index.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        i.checked_sub(1).and_then(|k| Self::ALL.get(k).copied())
    }

    /// Open states: no glasses, ordinary glasses, sunglasses.
    pub fn is_open(self) -> bool {
        matches!(
            self,
            EyeState::OpenNoGlasses | EyeState::OpenGlasses | EyeState::Sunglasses
        )
    }
}

impl fmt::Display for EyeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.index())
    }
}

/// Confidences (0..=100, summing to 100) of the six eye states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeStateConfidences<T>([T; 6]);

impl<T: Real> EyeStateConfidences<T> {
    /// Sums within this distance of 100 are accepted as-is.
    pub const SUM_TOLERANCE: f64 = 1e-3;
    /// Sums within this distance of 100 are rescaled to 100; larger deviations are rejected.
    pub const RENORMALIZE_LIMIT: f64 = 1.0;

    /// Validates the confidences, renormalizing a sum that is off by at most
    /// [`Self::RENORMALIZE_LIMIT`]. The boolean reports whether rescaling happened.
    pub fn new(c: [T; 6]) -> Result<(Self, bool), String> {
        let hundred = T::lit(100.0);
        for (i, &v) in c.iter().enumerate() {
            if !v.is_finite() || v < T::zero() || v > hundred {
                return Err(format!("c{} = {} outside [0, 100]", i + 1, v));
            }
        }
        let sum: T = c.iter().copied().sum();
        let off = (sum - hundred).abs();
        if off <= T::lit(Self::SUM_TOLERANCE) {
            Ok((Self(c), false))
        } else if off <= T::lit(Self::RENORMALIZE_LIMIT) {
            Ok((Self(c.map(|v| (v * hundred / sum).min(hundred))), true))
        } else {
            Err(format!("confidences sum to {sum}, expected 100"))
        }
    }

    pub fn values(&self) -> &[T; 6] {
        &self.0
    }

    /// State with the largest confidence; ties go to the lowest index.
    pub fn state(&self) -> EyeState {
        let mut best = 0;
        for i in 1..6 {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        EyeState::ALL[best]
    }
}

/// Eye-center landmarks and per-eye gaze directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeInfo<T> {
    pub left_center: Point2<T>,
    pub right_center: Point2<T>,
    pub left_dir: Point2<T>,
    pub right_dir: Point2<T>,
}

impl<T: Real> GazeInfo<T> {
    pub fn new(
        left_center: Point2<T>,
        right_center: Point2<T>,
        left_dir: Point2<T>,
        right_dir: Point2<T>,
    ) -> Result<Self, String> {
        if !(left_dir.norm() > T::zero()) {
            return Err("left gaze direction has zero magnitude".into());
        }
        if !(right_dir.norm() > T::zero()) {
            return Err("right gaze direction has zero magnitude".into());
        }
        Ok(Self {
            left_center,
            right_center,
            left_dir,
            right_dir,
        })
    }
}

/// Number of face regions carrying an occlusion degree: left eye, right eye,
/// left cheek, right cheek, mouth, jaw, nose.
pub const OCCLUSION_REGIONS: usize = 7;

/// Detector output for one person.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceInfo<T> {
    pub bbox: Rect<T>,
    pub left_eye: EyeStateConfidences<T>,
    pub right_eye: EyeStateConfidences<T>,
    pub gaze: Option<GazeInfo<T>>,
    /// Smile degree in [0, 100].
    pub smile: Option<T>,
    /// Head yaw in degrees, [-180, 180].
    pub yaw: T,
    /// Occlusion degree per region, each in [0, 1].
    pub occlusion: [T; OCCLUSION_REGIONS],
    /// Blur degree in [0, 100].
    pub blur: T,
    /// Window the gaze junction must fall in for the person to count as looking at the lens.
    pub gaze_range: Option<Rect<T>>,
}

/// Per-face thresholds for the predicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default, deny_unknown_fields)]
pub struct ThresholdConfig<T> {
    pub occlusion: [T; OCCLUSION_REGIONS],
    pub blur: T,
    pub smile: T,
    pub yaw_min: T,
    pub yaw_max: T,
    /// Scale applied to the face box when no gaze range was supplied.
    pub gaze_range_expansion: T,
}

impl<T: Real> Default for ThresholdConfig<T> {
    fn default() -> Self {
        Self {
            occlusion: [T::lit(0.6); OCCLUSION_REGIONS],
            blur: T::lit(50.0),
            smile: T::lit(50.0),
            yaw_min: T::lit(-30.0),
            yaw_max: T::lit(30.0),
            gaze_range_expansion: T::lit(1.25),
        }
    }
}

impl<T: Real> ThresholdConfig<T> {
    pub fn validate(&self) -> Result<(), String> {
        for (j, &t) in self.occlusion.iter().enumerate() {
            if !(t >= T::zero() && t <= T::one()) {
                return Err(format!("occlusion threshold {} = {} outside [0, 1]", j + 1, t));
            }
        }
        let hundred = T::lit(100.0);
        if !(self.blur >= T::zero() && self.blur <= hundred) {
            return Err(format!("blur threshold {} outside [0, 100]", self.blur));
        }
        if !(self.smile >= T::zero() && self.smile <= hundred) {
            return Err(format!("smile threshold {} outside [0, 100]", self.smile));
        }
        let lim = T::lit(180.0);
        if !(self.yaw_min >= -lim && self.yaw_max <= lim && self.yaw_min < self.yaw_max) {
            return Err(format!(
                "yaw window [{}, {}] must satisfy -180 <= lo < hi <= 180",
                self.yaw_min, self.yaw_max
            ));
        }
        if !(self.gaze_range_expansion > T::zero()) {
            return Err("gaze range expansion must be positive".into());
        }
        Ok(())
    }
}

impl<T: Real> FaceInfo<T> {
    /// Both eyes in an open state (open, open with glasses, sunglasses).
    pub fn is_open_eyed(&self) -> bool {
        self.left_eye.state().is_open() && self.right_eye.state().is_open()
    }

    /// Any region's occlusion degree reaches its threshold.
    pub fn is_occluded(&self, t: &ThresholdConfig<T>) -> bool {
        self.occlusion
            .iter()
            .zip(t.occlusion.iter())
            .any(|(&o, &theta)| o >= theta)
    }

    /// Yaw inside the inclusive window.
    pub fn is_facing_camera(&self, t: &ThresholdConfig<T>) -> bool {
        self.yaw >= t.yaw_min && self.yaw <= t.yaw_max
    }

    fn eyes_unoccluded(&self, t: &ThresholdConfig<T>) -> bool {
        self.occlusion[0] < t.occlusion[0] && self.occlusion[1] < t.occlusion[1]
    }

    /// Projects the averaged gaze ray from the midpoint of the eye centers
    /// by the face radius `max(w, h)`. `None` when gaze was not reported.
    pub fn gaze_junction(&self) -> Option<Point2<T>> {
        let g = self.gaze.as_ref()?;
        let origin = g.left_center.midpoint(g.right_center);
        let radius = self.bbox.w.max(self.bbox.h);
        let dir = g.left_dir.midpoint(g.right_dir);
        Some(Point2::new(origin.x + radius * dir.x, origin.y + radius * dir.y))
    }

    /// The supplied gaze range, or the expanded face box. The flag is true
    /// when the fallback was used.
    pub fn effective_gaze_range(&self, t: &ThresholdConfig<T>) -> (Rect<T>, bool) {
        match self.gaze_range {
            Some(r) => (r, false),
            None => (self.bbox.expanded(t.gaze_range_expansion), true),
        }
    }

    /// Looking at the lens. Requires open eyes, a camera-facing head and
    /// unoccluded eye regions; false when any prerequisite fails or gaze is missing.
    pub fn is_gazing(&self, t: &ThresholdConfig<T>) -> bool {
        if !(self.is_open_eyed() && self.is_facing_camera(t) && self.eyes_unoccluded(t)) {
            return false;
        }
        match self.gaze_junction() {
            Some(p) => self.effective_gaze_range(t).0.contains(p),
            None => false,
        }
    }

    /// Blur strictly above the threshold.
    pub fn is_blurred(&self, t: &ThresholdConfig<T>) -> bool {
        self.blur > t.blur
    }

    /// Smile strictly above the threshold; false when smile is missing.
    pub fn is_smiling(&self, t: &ThresholdConfig<T>) -> bool {
        self.smile.is_some_and(|m| m > t.smile)
    }

    pub fn center_x(&self) -> T {
        self.bbox.center().x
    }
}

/// Something that was adjusted or is missing on a face during ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WarningKind {
    BoxClamped,
    ConfidencesRenormalized,
    GazeMissing,
    SmileMissing,
    GazeRangeApproximated,
    FrameRescaled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceWarning {
    /// `None` for document-level warnings.
    pub face: Option<usize>,
    pub kind: WarningKind,
}

/// All faces detected in one photo, in detector order.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceSequence<T> {
    pub faces: Vec<FaceInfo<T>>,
    pub frame_w: T,
    pub frame_h: T,
    pub warnings: Vec<FaceWarning>,
}

impl<T: Real> FaceSequence<T> {
    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }
}

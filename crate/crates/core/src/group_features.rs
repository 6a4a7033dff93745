//! The seven group-photography features f1..f7.
//!
//! Each feature aggregates one per-face flag over all N faces of a photo.
//! The eye, occlusion, orientation and gaze features map the proportion `p`
//! of "good" faces through `1 - 2^-p`, except that a unanimous group scores
//! exactly 1. That makes a single offender cost at least half the score.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::face_model::{FaceSequence, ThresholdConfig};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroupError {
    #[error("no faces: group features are undefined for a photo without people")]
    NoFaces,
    #[error("frame width must be positive, got {0}")]
    InvalidWidth(f64),
}

/// Which reading of the smile feature to use when nobody smiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmileBranch {
    /// Nobody smiling scores 1, as the closed formula reads.
    #[default]
    Formula,
    /// Plain proportion of smiling faces.
    Proportion,
}

/// Features f1..f7 for one photo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GroupFeatureVector<T> {
    pub open_eyed: T,
    pub unoccluded: T,
    pub orientation: T,
    pub gaze: T,
    pub sharpness: T,
    pub smile: T,
    pub centered: T,
    pub n_faces: usize,
}

impl<T: Real> GroupFeatureVector<T> {
    /// Slots in f1..f7 order.
    pub fn to_array(&self) -> [T; 7] {
        [
            self.open_eyed,
            self.unoccluded,
            self.orientation,
            self.gaze,
            self.sharpness,
            self.smile,
            self.centered,
        ]
    }
}

fn count(flags: &[bool]) -> Result<(usize, usize), GroupError> {
    if flags.is_empty() {
        return Err(GroupError::NoFaces);
    }
    Ok((flags.iter().filter(|&&b| b).count(), flags.len()))
}

fn proportion<T: Real>(k: usize, n: usize) -> T {
    T::from_count(k) / T::from_count(n)
}

/// `1` when every flag is set, otherwise `1 - 2^-p` for the proportion `p` of set flags.
fn unanimous_or_decay<T: Real>(flags: &[bool]) -> Result<T, GroupError> {
    let (k, n) = count(flags)?;
    if k == n {
        Ok(T::one())
    } else {
        Ok(T::one() - T::lit(2.0).powf(-proportion::<T>(k, n)))
    }
}

/// f1 from per-face open-eye flags.
pub fn open_eyed_score<T: Real>(open: &[bool]) -> Result<T, GroupError> {
    unanimous_or_decay(open)
}

/// f2 from per-face occlusion flags (true = occluded).
pub fn unoccluded_score<T: Real>(occluded: &[bool]) -> Result<T, GroupError> {
    let (k, n) = count(occluded)?;
    if k == 0 {
        Ok(T::one())
    } else {
        Ok(T::one() - T::lit(2.0).powf(-(T::one() - proportion::<T>(k, n))))
    }
}

/// f3 from per-face camera-facing flags.
pub fn orientation_score<T: Real>(facing: &[bool]) -> Result<T, GroupError> {
    unanimous_or_decay(facing)
}

/// f4 from per-face looking-at-lens flags.
pub fn gaze_score<T: Real>(gazing: &[bool]) -> Result<T, GroupError> {
    unanimous_or_decay(gazing)
}

/// f5 from per-face blur flags (true = blurred): share of sharp faces.
pub fn sharpness_score<T: Real>(blurred: &[bool]) -> Result<T, GroupError> {
    let (k, n) = count(blurred)?;
    if k == 0 {
        Ok(T::one())
    } else {
        Ok(T::one() - proportion::<T>(k, n))
    }
}

/// f6 from per-face smile flags.
pub fn smile_score<T: Real>(smiling: &[bool], branch: SmileBranch) -> Result<T, GroupError> {
    let (k, n) = count(smiling)?;
    match branch {
        SmileBranch::Formula if k == 0 => Ok(T::one()),
        _ => Ok(proportion(k, n)),
    }
}

/// f7: 1 when the mean face-center x lies in the middle fifth `[0.4, 0.6]` of the frame.
pub fn center_score<T: Real>(center_xs: &[T], frame_width: T) -> Result<T, GroupError> {
    if !(frame_width > T::zero()) {
        return Err(GroupError::InvalidWidth(frame_width.to_f64_lossy()));
    }
    let mean_x = crate::scalar::mean(center_xs).ok_or(GroupError::NoFaces)?;
    let r = mean_x / frame_width;
    Ok(if r >= T::lit(0.4) && r <= T::lit(0.6) {
        T::one()
    } else {
        T::zero()
    })
}

/// Per-face flags in f1..f6 order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FaceFlags {
    pub open: Vec<bool>,
    pub occluded: Vec<bool>,
    pub facing: Vec<bool>,
    pub gazing: Vec<bool>,
    pub blurred: Vec<bool>,
    pub smiling: Vec<bool>,
}

impl FaceFlags {
    pub fn evaluate<T: Real>(seq: &FaceSequence<T>, t: &ThresholdConfig<T>) -> Self {
        let mut flags = Self::default();
        for f in &seq.faces {
            flags.open.push(f.is_open_eyed());
            flags.occluded.push(f.is_occluded(t));
            flags.facing.push(f.is_facing_camera(t));
            flags.gazing.push(f.is_gazing(t));
            flags.blurred.push(f.is_blurred(t));
            flags.smiling.push(f.is_smiling(t));
        }
        flags
    }
}

/// Computes f1..f7 for a face sequence. Face-center x is the box midpoint.
pub fn extract_group<T: Real>(
    seq: &FaceSequence<T>,
    t: &ThresholdConfig<T>,
    smile: SmileBranch,
) -> Result<GroupFeatureVector<T>, GroupError> {
    if seq.is_empty() {
        return Err(GroupError::NoFaces);
    }
    let flags = FaceFlags::evaluate(seq, t);
    let xs: Vec<T> = seq.faces.iter().map(|f| f.center_x()).collect();
    Ok(GroupFeatureVector {
        open_eyed: open_eyed_score(&flags.open)?,
        unoccluded: unoccluded_score(&flags.occluded)?,
        orientation: orientation_score(&flags.facing)?,
        gaze: gaze_score(&flags.gazing)?,
        sharpness: sharpness_score(&flags.blurred)?,
        smile: smile_score(&flags.smiling, smile)?,
        centered: center_score(&xs, seq.frame_w)?,
        n_faces: seq.len(),
    })
}

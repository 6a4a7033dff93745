//! JSON face-annotation documents (`<image>.faces.json`).

use serde::{Deserialize, Serialize};

use super::{
    EyeStateConfidences, FaceError, FaceInfo, FaceSequence, FaceWarning, GazeInfo, Point2, Rect,
    WarningKind, OCCLUSION_REGIONS,
};
use crate::scalar::Real;

#[derive(Debug, Deserialize, Serialize)]
#[serde(bound(
    serialize = "T: Real, F: Serialize",
    deserialize = "T: Real, F: Deserialize<'de>"
))]
struct RawDocument<T, F> {
    frame_w: T,
    frame_h: T,
    faces: Vec<F>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(bound = "T: Real")]
struct RawRect<T> {
    x: T,
    y: T,
    w: T,
    h: T,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(bound = "T: Real")]
struct RawEye<T> {
    c1: T,
    c2: T,
    c3: T,
    c4: T,
    c5: T,
    c6: T,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(bound = "T: Real")]
struct RawGaze<T> {
    c1: [T; 2],
    c2: [T; 2],
    dl: [T; 2],
    dr: [T; 2],
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(bound = "T: Real")]
struct RawFace<T> {
    #[serde(rename = "box")]
    bbox: RawRect<T>,
    left_eye: RawEye<T>,
    right_eye: RawEye<T>,
    #[serde(default)]
    gaze: Option<RawGaze<T>>,
    #[serde(default)]
    smile: Option<T>,
    yaw: T,
    occlusion: [T; OCCLUSION_REGIONS],
    blur: T,
    #[serde(default)]
    gaze_range: Option<RawRect<T>>,
}

impl<T: Real> From<Rect<T>> for RawRect<T> {
    fn from(r: Rect<T>) -> Self {
        Self {
            x: r.x,
            y: r.y,
            w: r.w,
            h: r.h,
        }
    }
}

fn pt<T: Real>(p: [T; 2]) -> Point2<T> {
    Point2::new(p[0], p[1])
}

/// Parses a face-annotation document.
///
/// When `frame` is given (the decoded image size) and differs from the
/// document's own frame, positions are rescaled to it and a warning is
/// recorded. Face boxes are clamped to the frame.
pub fn parse_face_annotations<T: Real>(
    document: &str,
    frame: Option<(T, T)>,
) -> Result<FaceSequence<T>, FaceError> {
    let raw: RawDocument<T, serde_json::Value> = serde_json::from_str(document).map_err(|e| {
        if e.is_data() {
            FaceError::Schema {
                location: "document".into(),
                message: e.to_string(),
            }
        } else {
            FaceError::Json(e)
        }
    })?;

    let (doc_w, doc_h) = (raw.frame_w, raw.frame_h);
    if !(doc_w > T::zero() && doc_h > T::zero() && doc_w.is_finite() && doc_h.is_finite()) {
        return Err(FaceError::Frame {
            width: doc_w.to_f64_lossy(),
            height: doc_h.to_f64_lossy(),
        });
    }
    let (frame_w, frame_h) = frame.unwrap_or((doc_w, doc_h));
    if !(frame_w > T::zero() && frame_h > T::zero()) {
        return Err(FaceError::Frame {
            width: frame_w.to_f64_lossy(),
            height: frame_h.to_f64_lossy(),
        });
    }
    let (sx, sy) = (frame_w / doc_w, frame_h / doc_h);
    let rescale = sx != T::one() || sy != T::one();

    let mut warnings = Vec::new();
    if rescale {
        warnings.push(FaceWarning {
            face: None,
            kind: WarningKind::FrameRescaled,
        });
    }

    let mut faces = Vec::with_capacity(raw.faces.len());
    for (index, value) in raw.faces.into_iter().enumerate() {
        let rf: RawFace<T> = serde_json::from_value(value).map_err(|e| FaceError::Schema {
            location: format!("faces[{index}]"),
            message: e.to_string(),
        })?;
        let mut warn = |kind| warnings.push(FaceWarning {
            face: Some(index),
            kind,
        });
        let invalid = |field: &'static str, message: String| FaceError::Validation {
            index,
            field,
            message,
        };

        let scale_rect =
            |r: RawRect<T>| Rect::new(r.x * sx, r.y * sy, r.w * sx, r.h * sy);
        let scale_pt = |p: [T; 2]| Point2::new(p[0] * sx, p[1] * sy);

        let b = scale_rect(rf.bbox);
        if !(b.w > T::zero() && b.h > T::zero()) || !(b.x.is_finite() && b.y.is_finite()) {
            return Err(invalid("box", format!("needs positive finite size, got {}x{}", b.w, b.h)));
        }
        let (x0, x1) = (b.x.max(T::zero()), (b.x + b.w).min(frame_w));
        let (y0, y1) = (b.y.max(T::zero()), (b.y + b.h).min(frame_h));
        if !(x1 > x0 && y1 > y0) {
            return Err(invalid("box", "lies entirely outside the frame".into()));
        }
        let bbox = Rect::new(x0, y0, x1 - x0, y1 - y0);
        if bbox != b {
            warn(WarningKind::BoxClamped);
            log::warn!("face {index}: box clamped to the frame");
        }

        let eye = |e: RawEye<T>, field| {
            EyeStateConfidences::new([e.c1, e.c2, e.c3, e.c4, e.c5, e.c6])
                .map_err(|m| invalid(field, m))
        };
        let (left_eye, left_fixed) = eye(rf.left_eye, "left_eye")?;
        let (right_eye, right_fixed) = eye(rf.right_eye, "right_eye")?;
        if left_fixed || right_fixed {
            warn(WarningKind::ConfidencesRenormalized);
        }

        let gaze = match rf.gaze {
            Some(g) => Some(
                GazeInfo::new(scale_pt(g.c1), scale_pt(g.c2), pt(g.dl), pt(g.dr))
                    .map_err(|m| invalid("gaze", m))?,
            ),
            None => {
                warn(WarningKind::GazeMissing);
                None
            }
        };

        let hundred = T::lit(100.0);
        if let Some(m) = rf.smile {
            if !(m >= T::zero() && m <= hundred) {
                return Err(invalid("smile", format!("{m} outside [0, 100]")));
            }
        } else {
            warn(WarningKind::SmileMissing);
        }
        let lim = T::lit(180.0);
        if !(rf.yaw >= -lim && rf.yaw <= lim) {
            return Err(invalid("yaw", format!("{} outside [-180, 180]", rf.yaw)));
        }
        for (j, &o) in rf.occlusion.iter().enumerate() {
            if !(o >= T::zero() && o <= T::one()) {
                return Err(invalid("occlusion", format!("o{} = {} outside [0, 1]", j + 1, o)));
            }
        }
        if !(rf.blur >= T::zero() && rf.blur <= hundred) {
            return Err(invalid("blur", format!("{} outside [0, 100]", rf.blur)));
        }
        let gaze_range = match rf.gaze_range {
            Some(r) => {
                let r = scale_rect(r);
                if !(r.w >= T::zero() && r.h >= T::zero()) {
                    return Err(invalid("gaze_range", "negative size".into()));
                }
                Some(r)
            }
            None => {
                warn(WarningKind::GazeRangeApproximated);
                None
            }
        };

        faces.push(FaceInfo {
            bbox,
            left_eye,
            right_eye,
            gaze,
            smile: rf.smile,
            yaw: rf.yaw,
            occlusion: rf.occlusion,
            blur: rf.blur,
            gaze_range,
        });
    }

    Ok(FaceSequence {
        faces,
        frame_w,
        frame_h,
        warnings,
    })
}

/// Serializes a sequence back into the annotation schema.
pub fn to_annotation_json<T: Real>(seq: &FaceSequence<T>) -> String {
    let eye = |e: &EyeStateConfidences<T>| {
        let v = e.values();
        RawEye {
            c1: v[0],
            c2: v[1],
            c3: v[2],
            c4: v[3],
            c5: v[4],
            c6: v[5],
        }
    };
    let arr = |p: Point2<T>| [p.x, p.y];
    let doc = RawDocument {
        frame_w: seq.frame_w,
        frame_h: seq.frame_h,
        faces: seq
            .faces
            .iter()
            .map(|f| RawFace {
                bbox: f.bbox.into(),
                left_eye: eye(&f.left_eye),
                right_eye: eye(&f.right_eye),
                gaze: f.gaze.map(|g| RawGaze {
                    c1: arr(g.left_center),
                    c2: arr(g.right_center),
                    dl: arr(g.left_dir),
                    dr: arr(g.right_dir),
                }),
                smile: f.smile,
                yaw: f.yaw,
                occlusion: f.occlusion,
                blur: f.blur,
                gaze_range: f.gaze_range.map(Into::into),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("annotation documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_FACE: &str = r#"{
        "frame_w": 200, "frame_h": 100,
        "faces": [{
            "box": {"x": 10, "y": 10, "w": 30, "h": 40},
            "left_eye": {"c1": 99.5, "c2": 0, "c3": 0, "c4": 0, "c5": 0, "c6": 0},
            "right_eye": {"c1": 90, "c2": 10, "c3": 0, "c4": 0, "c5": 0, "c6": 0},
            "gaze": {"c1": [20, 25], "c2": [30, 25], "dl": [0.0, 0.2], "dr": [0.1, 0.2]},
            "smile": 70.5, "yaw": -12.0,
            "occlusion": [0, 0, 0.1, 0, 0, 0, 0],
            "blur": 3.2,
            "gaze_range": {"x": 5, "y": 5, "w": 40, "h": 50}
        }]
    }"#;

    #[test]
    fn empty_document() {
        let seq: FaceSequence<f64> =
            parse_face_annotations(r#"{"frame_w": 10, "frame_h": 10, "faces": []}"#, None)
                .unwrap();
        assert!(seq.is_empty());
    }

    #[test]
    fn parses_and_renormalizes() {
        let seq: FaceSequence<f64> = parse_face_annotations(ONE_FACE, None).unwrap();
        assert_eq!(seq.len(), 1);
        let f = &seq.faces[0];
        assert!((f.left_eye.values().iter().sum::<f64>() - 100.0).abs() < 1e-9);
        assert!(seq
            .warnings
            .iter()
            .any(|w| w.kind == WarningKind::ConfidencesRenormalized));
        assert_eq!(f.smile, Some(70.5));
        assert_eq!(f.bbox, Rect::new(10.0, 10.0, 30.0, 40.0));
    }

    #[test]
    fn order_preserved_and_round_trips() {
        let mut seq: FaceSequence<f64> = parse_face_annotations(ONE_FACE, None).unwrap();
        let mut second = seq.faces[0].clone();
        second.bbox.x = 100.0;
        let mut third = seq.faces[0].clone();
        third.bbox.x = 150.0;
        seq.faces.push(second);
        seq.faces.push(third);
        let json = to_annotation_json(&seq);
        let back: FaceSequence<f64> = parse_face_annotations(&json, None).unwrap();
        assert_eq!(back.faces, seq.faces);
        let xs: Vec<f64> = back.faces.iter().map(|f| f.bbox.x).collect();
        assert_eq!(xs, vec![10.0, 100.0, 150.0]);
    }

    #[test]
    fn schema_error_names_entry_and_field() {
        let doc = ONE_FACE.replace("\"blur\": 3.2,", "");
        let doc = doc.replace("\"faces\": [{", "\"faces\": [{\"box\": {\"x\": 0, \"y\": 0, \"w\": 1, \"h\": 1}, \"left_eye\": {\"c1\": 100, \"c2\": 0, \"c3\": 0, \"c4\": 0, \"c5\": 0, \"c6\": 0}, \"right_eye\": {\"c1\": 100, \"c2\": 0, \"c3\": 0, \"c4\": 0, \"c5\": 0, \"c6\": 0}, \"yaw\": 0, \"occlusion\": [0,0,0,0,0,0,0], \"blur\": 0}, {");
        let err = parse_face_annotations::<f64>(&doc, None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("faces[1]"), "{msg}");
        assert!(msg.contains("blur"), "{msg}");
    }

    #[test]
    fn bad_confidence_sum_rejected() {
        let doc = ONE_FACE.replace("\"c1\": 90, \"c2\": 10", "\"c1\": 80, \"c2\": 10");
        let err = parse_face_annotations::<f64>(&doc, None).unwrap_err();
        assert!(matches!(
            err,
            FaceError::Validation {
                index: 0,
                field: "right_eye",
                ..
            }
        ));
    }

    #[test]
    fn out_of_range_values_rejected() {
        for (from, to, field) in [
            ("\"yaw\": -12.0", "\"yaw\": -190.0", "yaw"),
            ("\"blur\": 3.2", "\"blur\": 300", "blur"),
            ("\"smile\": 70.5", "\"smile\": -1", "smile"),
            ("[0, 0, 0.1, 0, 0, 0, 0]", "[0, 0, 1.1, 0, 0, 0, 0]", "occlusion"),
            ("\"dl\": [0.0, 0.2]", "\"dl\": [0.0, 0.0]", "gaze"),
        ] {
            let doc = ONE_FACE.replace(from, to);
            match parse_face_annotations::<f64>(&doc, None) {
                Err(FaceError::Validation { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{field}: expected validation error, got {other:?}"),
            }
        }
    }

    #[test]
    fn missing_optional_fields_warn() {
        let doc = ONE_FACE
            .replace(
                "\"gaze\": {\"c1\": [20, 25], \"c2\": [30, 25], \"dl\": [0.0, 0.2], \"dr\": [0.1, 0.2]},",
                "\"gaze\": null,",
            )
            .replace("\"smile\": 70.5,", "")
            .replace(",\n            \"gaze_range\": {\"x\": 5, \"y\": 5, \"w\": 40, \"h\": 50}", "");
        let seq: FaceSequence<f64> = parse_face_annotations(&doc, None).unwrap();
        let kinds: Vec<_> = seq.warnings.iter().map(|w| w.kind.clone()).collect();
        assert!(kinds.contains(&WarningKind::GazeMissing));
        assert!(kinds.contains(&WarningKind::SmileMissing));
        assert!(kinds.contains(&WarningKind::GazeRangeApproximated));
    }

    #[test]
    fn box_clamped_to_frame() {
        let doc = ONE_FACE.replace(
            "\"box\": {\"x\": 10, \"y\": 10, \"w\": 30, \"h\": 40}",
            "\"box\": {\"x\": 190, \"y\": -5, \"w\": 30, \"h\": 40}",
        );
        let seq: FaceSequence<f64> = parse_face_annotations(&doc, None).unwrap();
        assert_eq!(seq.faces[0].bbox, Rect::new(190.0, 0.0, 10.0, 35.0));
        assert!(seq.warnings.iter().any(|w| w.kind == WarningKind::BoxClamped));

        let outside = ONE_FACE.replace(
            "\"box\": {\"x\": 10, \"y\": 10, \"w\": 30, \"h\": 40}",
            "\"box\": {\"x\": 500, \"y\": 10, \"w\": 30, \"h\": 40}",
        );
        assert!(parse_face_annotations::<f64>(&outside, None).is_err());
    }

    #[test]
    fn frame_mismatch_rescales_positions() {
        let seq: FaceSequence<f64> = parse_face_annotations(ONE_FACE, Some((400.0, 200.0))).unwrap();
        assert_eq!(seq.faces[0].bbox, Rect::new(20.0, 20.0, 60.0, 80.0));
        assert_eq!(seq.frame_w, 400.0);
        assert!(seq.warnings.iter().any(|w| w.kind == WarningKind::FrameRescaled));
    }

    #[test]
    fn malformed_json() {
        assert!(matches!(
            parse_face_annotations::<f64>("{not json", None),
            Err(FaceError::Json(_))
        ));
    }
}

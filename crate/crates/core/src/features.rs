//! The 90-slot photo feature vector, per-photo extraction and the feature CSV.
//!
//! Slots 1..7 are the group features, slots 8..90 the generic ones. The CSV
//! has header `id,f1,...,fN,score,label`; `score` and `label` may be empty,
//! `label` is `1` (good) or `0` (bad). Floats are written with the shortest
//! representation that parses back to the same value.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Config;
use crate::face_model::{fetch_faces, FaceError, FaceProvider, FaceSequence, FaceWarning};
use crate::generic_features::{generic_feature_names, generic_features, preprocess, FeatureError, GENERIC_COUNT};
use crate::group_features::{extract_group, GroupError, GroupFeatureVector};
use crate::scalar::Real;

pub const GROUP_COUNT: usize = 7;
pub const FEATURE_COUNT: usize = GROUP_COUNT + GENERIC_COUNT;

const GROUP_NAMES: [&str; GROUP_COUNT] = [
    "open_eyed",
    "unoccluded",
    "orientation",
    "gaze",
    "sharpness",
    "smile",
    "centered",
];

/// Descriptive name of every slot, in slot order.
pub fn feature_names() -> &'static [String] {
    static NAMES: OnceLock<Vec<String>> = OnceLock::new();
    NAMES.get_or_init(|| {
        GROUP_NAMES
            .iter()
            .map(|s| s.to_string())
            .chain(generic_feature_names().iter().cloned())
            .collect()
    })
}

/// CSV column label of a zero-based slot: `f1`, `f2`, ...
pub fn column_name(slot: usize) -> String {
    format!("f{}", slot + 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn from_parts(group: &GroupFeatureVector<f64>, generic: &[f64; GENERIC_COUNT]) -> Self {
        let mut v = [0.0; FEATURE_COUNT];
        v[..GROUP_COUNT].copy_from_slice(&group.to_array());
        v[GROUP_COUNT..].copy_from_slice(generic);
        Self(v)
    }

    /// One-based slot, `f1` to `f90`.
    pub fn slot(&self, slot: usize) -> f64 {
        self.0[slot - 1]
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.to_vec()
    }
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Image(#[from] FeatureError),
    #[error(transparent)]
    Face(#[from] FaceError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhotoFeatures {
    pub values: FeatureVector,
    pub group: GroupFeatureVector<f64>,
    pub warnings: Vec<FaceWarning>,
}

/// Features of decoded image bytes with an already parsed face sequence.
pub fn extract_with_faces(bytes: &[u8], faces: &FaceSequence<f64>, cfg: &Config) -> Result<PhotoFeatures, ExtractError> {
    let pre = preprocess(bytes, &cfg.generic)?;
    let group = extract_group(faces, &cfg.thresholds, cfg.smile_branch)?;
    let generic = generic_features(&pre, &cfg.generic);
    Ok(PhotoFeatures {
        values: FeatureVector::from_parts(&group, &generic.0),
        group,
        warnings: faces.warnings.clone(),
    })
}

/// Reads an image, fetches its faces and computes all 90 slots.
pub fn extract_photo(path: &Path, cfg: &Config, provider: &FaceProvider) -> Result<PhotoFeatures, ExtractError> {
    let bytes = std::fs::read(path).map_err(|source| ExtractError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let pre = preprocess(&bytes, &cfg.generic)?;
    let frame = (f64::from(pre.original_width), f64::from(pre.original_height));
    let faces = fetch_faces(path, Some(frame), provider)?;
    let group = extract_group(&faces, &cfg.thresholds, cfg.smile_branch)?;
    let generic = generic_features(&pre, &cfg.generic);
    Ok(PhotoFeatures {
        values: FeatureVector::from_parts(&group, &generic.0),
        group,
        warnings: faces.warnings,
    })
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("feature csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("feature csv header must be id,f1..fN,score,label; {0}")]
    Header(String),
    #[error("feature csv line {line}: {message}")]
    Row { line: u64, message: String },
}

/// Rows of the feature CSV.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FeatureTable<T> {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<T>>,
    pub scores: Vec<Option<T>>,
    pub labels: Vec<Option<bool>>,
}

impl<T: Real> FeatureTable<T> {
    pub fn new() -> Self {
        Self {
            ids: Vec::new(),
            rows: Vec::new(),
            scores: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn push(&mut self, id: impl Into<String>, row: Vec<T>, score: Option<T>, label: Option<bool>) {
        self.ids.push(id.into());
        self.rows.push(row);
        self.scores.push(score);
        self.labels.push(label);
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// Rows that carry a label, with those labels.
    pub fn labeled(&self) -> (Vec<Vec<T>>, Vec<bool>) {
        self.rows
            .iter()
            .zip(&self.labels)
            .filter_map(|(r, l)| l.map(|l| (r.clone(), l)))
            .unzip()
    }

    /// Rows that carry a score, with those scores.
    pub fn scored(&self) -> (Vec<Vec<T>>, Vec<T>) {
        self.rows
            .iter()
            .zip(&self.scores)
            .filter_map(|(r, s)| s.map(|s| (r.clone(), s)))
            .unzip()
    }

    pub fn write<W: Write>(&self, out: W) -> Result<(), CsvError> {
        let width = self.width().max(FEATURE_COUNT * usize::from(self.is_empty()));
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec!["id".to_string()];
        header.extend((0..width).map(column_name));
        header.extend(["score".to_string(), "label".to_string()]);
        w.write_record(&header)?;
        for i in 0..self.len() {
            if self.rows[i].len() != width {
                return Err(CsvError::Row {
                    line: i as u64 + 2,
                    message: format!("row has {} features, expected {width}", self.rows[i].len()),
                });
            }
            let mut rec = Vec::with_capacity(width + 3);
            rec.push(self.ids[i].clone());
            rec.extend(self.rows[i].iter().map(|v| v.to_string()));
            rec.push(self.scores[i].map(|s| s.to_string()).unwrap_or_default());
            rec.push(match self.labels[i] {
                Some(true) => "1".into(),
                Some(false) => "0".into(),
                None => String::new(),
            });
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, CsvError> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn read<R: Read>(input: R) -> Result<Self, CsvError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = r.headers()?.clone();
        let n = header.len();
        if n < 4 || &header[0] != "id" || &header[n - 2] != "score" || &header[n - 1] != "label" {
            return Err(CsvError::Header(format!("got {} columns", n)));
        }
        for (j, h) in header.iter().enumerate().take(n - 2).skip(1) {
            if h != column_name(j - 1) {
                return Err(CsvError::Header(format!("column {} is `{h}`, expected `{}`", j + 1, column_name(j - 1))));
            }
        }
        let width = n - 3;
        let mut table = Self::new();
        for rec in r.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |message: String| CsvError::Row { line, message };
            let num = |s: &str, col: &str| -> Result<T, CsvError> {
                let v: f64 = s
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("column {col}: `{s}` is not a number")))?;
                if !v.is_finite() {
                    return Err(bad(format!("column {col}: value is not finite")));
                }
                Ok(T::lit(v))
            };
            let row = (0..width)
                .map(|j| num(&rec[j + 1], &column_name(j)))
                .collect::<Result<Vec<T>, _>>()?;
            let score = match rec[n - 2].trim() {
                "" => None,
                s => Some(num(s, "score")?),
            };
            let label = match rec[n - 1].trim() {
                "" => None,
                "1" => Some(true),
                "0" => Some(false),
                s => return Err(bad(format!("label `{s}` must be 1, 0 or empty"))),
            };
            table.push(&rec[0], row, score, label);
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, CsvError> {
        let f = std::fs::File::open(path).map_err(|source| CsvError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read(std::io::BufReader::new(f))
    }

    pub fn save(&self, path: &Path) -> Result<(), CsvError> {
        let io = |source| CsvError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut f = std::fs::File::create(path).map_err(io)?;
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        f.write_all(&buf).map_err(io)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn names_cover_all_slots() {
        assert_eq!(feature_names().len(), FEATURE_COUNT);
        assert_eq!(feature_names()[0], "open_eyed");
        assert_eq!(feature_names()[89], "segment_count");
        assert_eq!(column_name(89), "f90");
    }

    #[test]
    fn header_shape() {
        let mut t = FeatureTable::<f64>::new();
        t.push("a", vec![0.5; FEATURE_COUNT], Some(6.2), Some(true));
        let text = t.to_csv_string().unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header.split(',').count(), FEATURE_COUNT + 3);
        assert!(header.starts_with("id,f1,f2,") && header.ends_with(",f90,score,label"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn empty_table_still_has_full_header() {
        let text = FeatureTable::<f64>::new().to_csv_string().unwrap();
        assert_eq!(text.trim_end().split(',').count(), FEATURE_COUNT + 3);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(FeatureTable::<f64>::read("x,f1,score,label\n".as_bytes()), Err(CsvError::Header(_))));
        assert!(matches!(FeatureTable::<f64>::read("id,f2,score,label\n".as_bytes()), Err(CsvError::Header(_))));
        assert!(matches!(
            FeatureTable::<f64>::read("id,f1,score,label\na,zz,,\n".as_bytes()),
            Err(CsvError::Row { line: 2, .. })
        ));
        assert!(matches!(
            FeatureTable::<f64>::read("id,f1,score,label\na,1,,yes\n".as_bytes()),
            Err(CsvError::Row { .. })
        ));
        assert!(FeatureTable::<f64>::read("id,f1,score,label\na,1\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(
            rows in proptest::collection::vec(
                (proptest::collection::vec(-1e12f64..1e12, 3), proptest::option::of(0.0f64..10.0), proptest::option::of(any::<bool>())),
                0..8,
            )
        ) {
            let mut t = FeatureTable::<f64>::new();
            for (i, (r, s, l)) in rows.into_iter().enumerate() {
                t.push(format!("photo, {i}"), r, s, l);
            }
            let text = t.to_csv_string().unwrap();
            let back = FeatureTable::<f64>::read(text.as_bytes()).unwrap();
            if t.is_empty() {
                prop_assert!(back.is_empty());
            } else {
                prop_assert_eq!(back, t);
            }
        }
    }
}

//! In-memory dataset state and its append-only JSON-lines file.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_score, score_histogram, DatasetConfig, DatasetError, Label, Photo, PhotoRecord, Rating, Record, Source,
    HISTOGRAM_BINS,
};
use crate::features::FeatureTable;
use crate::ml::cv::train_test_split;

/// Result of an accepted rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingAck {
    pub photo_id: String,
    pub count: usize,
    pub mean_score: Option<f64>,
    pub label: Option<Label>,
    /// More ratings than `max_raters`.
    pub over_cap: bool,
}

/// Photos and ratings, without persistence. Cheap enough to clone as a
/// read snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: DatasetConfig,
    photos: Vec<PhotoRecord>,
    index: HashMap<String, usize>,
}

impl Dataset {
    pub fn new(config: DatasetConfig) -> Self {
        Self {
            config,
            photos: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn photos(&self) -> &[PhotoRecord] {
        &self.photos
    }

    pub fn get(&self, photo_id: &str) -> Option<&PhotoRecord> {
        self.index.get(photo_id).map(|&i| &self.photos[i])
    }

    pub fn rating_count(&self) -> usize {
        self.photos.iter().map(|p| p.ratings.len()).sum()
    }

    /// Next free id of the form `p000001`.
    pub fn fresh_id(&self) -> String {
        let mut n = self.photos.len() + 1;
        loop {
            let id = format!("p{n:06}");
            if !self.index.contains_key(&id) {
                return id;
            }
            n += 1;
        }
    }

    fn check_photo(&self, photo: &Photo) -> Result<(), DatasetError> {
        if photo.photo_id.is_empty() {
            return Err(DatasetError::Empty { field: "photo_id" });
        }
        if self.index.contains_key(&photo.photo_id) {
            return Err(DatasetError::DuplicatePhoto(photo.photo_id.clone()));
        }
        Ok(())
    }

    fn check_rating(&self, r: &Rating) -> Result<usize, DatasetError> {
        check_score(i64::from(r.score))?;
        if r.rater_id.is_empty() {
            return Err(DatasetError::Empty { field: "rater_id" });
        }
        let &i = self
            .index
            .get(&r.photo_id)
            .ok_or_else(|| DatasetError::UnknownPhoto(r.photo_id.clone()))?;
        if self.photos[i].rated_by(&r.rater_id) {
            return Err(DatasetError::Duplicate {
                photo: r.photo_id.clone(),
                rater: r.rater_id.clone(),
            });
        }
        Ok(i)
    }

    /// Validates and applies one record.
    pub fn apply(&mut self, record: Record) -> Result<(), DatasetError> {
        match record {
            Record::Photo(p) => {
                self.check_photo(&p)?;
                self.index.insert(p.photo_id.clone(), self.photos.len());
                self.photos.push(PhotoRecord {
                    photo: p,
                    ratings: Vec::new(),
                });
            }
            Record::Rating(r) => {
                let i = self.check_rating(&r)?;
                self.photos[i].ratings.push(r);
            }
        }
        Ok(())
    }

    fn ack(&self, photo_id: &str) -> RatingAck {
        let p = self.get(photo_id).expect("photo exists");
        RatingAck {
            photo_id: photo_id.to_string(),
            count: p.ratings.len(),
            mean_score: p.mean_score(&self.config),
            label: p.label(&self.config),
            over_cap: p.over_cap(&self.config),
        }
    }

    /// Photos with enough ratings, with their mean and label.
    pub fn labeled(&self) -> Vec<(&PhotoRecord, f64, Label)> {
        self.photos
            .iter()
            .filter_map(|p| {
                let m = p.mean_score(&self.config)?;
                Some((p, m, super::binarize(m, self.config.good_threshold)))
            })
            .collect()
    }

    /// Distribution of mean scores over labeled photos.
    pub fn histogram(&self) -> [f64; HISTOGRAM_BINS] {
        let means: Vec<f64> = self.labeled().iter().map(|&(_, m, _)| m).collect();
        score_histogram(&means)
    }

    /// A photo for `rater`: one they have not rated, chosen uniformly among
    /// those with the fewest ratings. Photos at `max_raters` are only offered
    /// once every other candidate is full too.
    pub fn next_for<R: Rng>(&self, rater: &str, rng: &mut R) -> Option<&PhotoRecord> {
        let unrated: Vec<&PhotoRecord> = self.photos.iter().filter(|p| !p.rated_by(rater)).collect();
        let fewest = unrated.iter().map(|p| p.ratings.len()).min()?;
        let pool: Vec<&PhotoRecord> = unrated.into_iter().filter(|p| p.ratings.len() == fewest).collect();
        Some(pool[rng.gen_range(0..pool.len())])
    }

    /// Seeded split of the labeled photo ids.
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<(Vec<String>, Vec<String>), DatasetError> {
        let ids: Vec<String> = self.labeled().iter().map(|(p, _, _)| p.id().to_string()).collect();
        let (train, test) = train_test_split(ids.len(), test_fraction, seed)?;
        let pick = |idx: Vec<usize>| idx.into_iter().map(|i| ids[i].clone()).collect();
        Ok((pick(train), pick(test)))
    }

    /// Joins every labeled photo with its extracted features, filling in
    /// score and label from the ratings.
    pub fn export(&self, features: &FeatureTable<f64>) -> Result<FeatureTable<f64>, DatasetError> {
        let mut out = FeatureTable::new();
        for (p, mean, label) in self.labeled() {
            let i = features
                .position(p.id())
                .ok_or_else(|| DatasetError::MissingFeatures(p.id().to_string()))?;
            out.push(p.id(), features.rows[i].clone(), Some(mean), Some(label.is_good()));
        }
        Ok(out)
    }
}

/// A [`Dataset`] backed by an append-only records file.
#[derive(Debug)]
pub struct Store {
    data: Dataset,
    path: Option<PathBuf>,
    file: Option<File>,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Store {
    pub fn in_memory(config: DatasetConfig) -> Self {
        Self {
            data: Dataset::new(config),
            path: None,
            file: None,
        }
    }

    /// Opens or creates the records file. An unterminated last line, as left
    /// by a crash mid-write, is dropped and truncated away.
    pub fn open(path: &Path, config: DatasetConfig) -> Result<Self, DatasetError> {
        let mut data = Dataset::new(config);
        let text = match std::fs::read(path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(io_err(path)(e)),
        };
        let complete = text.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
        if complete < text.len() {
            log::warn!(
                "{}: dropping {} bytes of unterminated record",
                path.display(),
                text.len() - complete
            );
        }
        let body = std::str::from_utf8(&text[..complete]).map_err(|e| DatasetError::Corrupt {
            line: 0,
            message: e.to_string(),
        })?;
        for (n, line) in body.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(line).map_err(|e| DatasetError::Corrupt {
                line: n + 1,
                message: e.to_string(),
            })?;
            data.apply(record).map_err(|e| DatasetError::Corrupt {
                line: n + 1,
                message: e.to_string(),
            })?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err(path))?;
        if complete < text.len() {
            file.set_len(complete as u64).map_err(io_err(path))?;
        }
        Ok(Self {
            data,
            path: Some(path.to_path_buf()),
            file: Some(file),
        })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn persist(&mut self, record: &Record) -> Result<(), DatasetError> {
        if let (Some(f), Some(path)) = (self.file.as_mut(), self.path.as_ref()) {
            let mut line = serde_json::to_vec(record).expect("record serializes");
            line.push(b'\n');
            f.write_all(&line).map_err(io_err(path))?;
        }
        Ok(())
    }

    /// Registers a photo; `photo_id` defaults to a fresh sequential id.
    pub fn add_photo(
        &mut self,
        photo_id: Option<String>,
        image: impl Into<String>,
        source: Source,
    ) -> Result<String, DatasetError> {
        let photo = Photo {
            photo_id: photo_id.unwrap_or_else(|| self.data.fresh_id()),
            image: image.into(),
            source,
        };
        self.data.check_photo(&photo)?;
        let id = photo.photo_id.clone();
        let record = Record::Photo(photo);
        self.persist(&record)?;
        self.data.apply(record)?;
        Ok(id)
    }

    /// Validates, persists and applies a rating.
    pub fn append_rating(&mut self, rating: Rating) -> Result<RatingAck, DatasetError> {
        self.data.check_rating(&rating)?;
        let id = rating.photo_id.clone();
        let record = Record::Rating(rating);
        self.persist(&record)?;
        self.data.apply(record)?;
        let ack = self.data.ack(&id);
        if ack.over_cap {
            log::info!("photo {id} has {} ratings, above the cap", ack.count);
        }
        Ok(ack)
    }

    pub fn sync(&mut self) -> Result<(), DatasetError> {
        if let (Some(f), Some(path)) = (self.file.as_mut(), self.path.as_ref()) {
            f.sync_data().map_err(io_err(path))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FEATURE_COUNT;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rating(photo: &str, rater: &str, score: u8) -> Rating {
        Rating {
            photo_id: photo.into(),
            rater_id: rater.into(),
            score,
            timestamp: 0,
        }
    }

    fn cfg(min: usize) -> DatasetConfig {
        DatasetConfig {
            min_raters: min,
            ..Default::default()
        }
    }

    #[test]
    fn append_then_reload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        {
            let mut s = Store::open(&path, cfg(5)).unwrap();
            let id = s.add_photo(None, "a.png", Source::Internet).unwrap();
            assert_eq!(id, "p000001");
            s.append_rating(rating(&id, "r1", 7)).unwrap();
        }
        let s = Store::open(&path, cfg(5)).unwrap();
        assert_eq!(s.data().get("p000001").unwrap().ratings, vec![rating("p000001", "r1", 7)]);
    }

    #[test]
    fn rejections() {
        let mut s = Store::in_memory(cfg(5));
        s.add_photo(Some("x".into()), "x.png", Source::SelfTaken).unwrap();
        s.append_rating(rating("x", "r1", 5)).unwrap();
        assert!(matches!(s.append_rating(rating("x", "r1", 6)), Err(DatasetError::Duplicate { .. })));
        assert!(matches!(s.append_rating(rating("y", "r1", 6)), Err(DatasetError::UnknownPhoto(_))));
        assert!(matches!(s.append_rating(rating("x", "r2", 0)), Err(DatasetError::ScoreRange(0))));
        assert!(matches!(
            s.add_photo(Some("x".into()), "z.png", Source::Internet),
            Err(DatasetError::DuplicatePhoto(_))
        ));
        assert_eq!(s.data().rating_count(), 1);
    }

    #[test]
    fn label_appears_at_min_raters_and_cap_is_flagged() {
        let mut s = Store::in_memory(DatasetConfig {
            min_raters: 5,
            max_raters: 6,
            good_threshold: 6.0,
        });
        let id = s.add_photo(None, "a.png", Source::SelfTaken).unwrap();
        for k in 1..=7 {
            let ack = s.append_rating(rating(&id, &format!("r{k}"), 6)).unwrap();
            assert_eq!(ack.count, k);
            assert_eq!(ack.label.is_some(), k >= 5);
            assert_eq!(ack.over_cap, k > 6);
        }
        assert_eq!(s.data().histogram()[6], 1.0);
    }

    #[test]
    fn truncated_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        std::fs::write(
            &path,
            "{\"type\":\"photo\",\"photo_id\":\"a\",\"image\":\"a.png\",\"source\":\"self\"}\n{\"type\":\"rat",
        )
        .unwrap();
        let mut s = Store::open(&path, cfg(1)).unwrap();
        s.append_rating(rating("a", "r", 9)).unwrap();
        drop(s);
        let s = Store::open(&path, cfg(1)).unwrap();
        assert_eq!(s.data().get("a").unwrap().mean_score(&cfg(1)), Some(9.0));
    }

    #[test]
    fn corrupt_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        std::fs::write(&path, "{\"type\":\"rating\",\"photo_id\":\"a\",\"rater_id\":\"r\",\"score\":3,\"timestamp\":0}\n").unwrap();
        assert!(matches!(Store::open(&path, cfg(1)), Err(DatasetError::Corrupt { line: 1, .. })));
    }

    #[test]
    fn next_prefers_least_rated() {
        let mut s = Store::in_memory(cfg(1));
        for _ in 0..3 {
            s.add_photo(None, "i.png", Source::Internet).unwrap();
        }
        s.append_rating(rating("p000001", "a", 5)).unwrap();
        s.append_rating(rating("p000002", "a", 5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            assert_eq!(s.data().next_for("b", &mut rng).unwrap().id(), "p000003");
        }
        s.append_rating(rating("p000003", "a", 5)).unwrap();
        assert!(s.data().next_for("a", &mut rng).is_none());
    }

    #[test]
    fn export_and_split() {
        let mut s = Store::in_memory(cfg(1));
        let mut feats = FeatureTable::new();
        for k in 0..10u8 {
            let id = s.add_photo(None, "i.png", Source::Internet).unwrap();
            feats.push(id.clone(), vec![f64::from(k); FEATURE_COUNT], None, None);
            if k < 8 {
                s.append_rating(rating(&id, "a", k + 1)).unwrap();
            }
        }
        let t = s.data().export(&feats).unwrap();
        assert_eq!(t.len(), 8);
        assert_eq!(t.labels.iter().filter(|l| **l == Some(true)).count(), 3);
        let (train, test) = s.data().split(0.25, 3).unwrap();
        assert_eq!((train.len(), test.len()), (6, 2));
        assert_eq!(s.data().split(0.25, 3).unwrap(), (train.clone(), test.clone()));
        assert!(test.iter().all(|t| !train.contains(t)));
        assert!(s.data().split(0.0, 3).unwrap().1.is_empty());
        let mut short = feats.clone();
        short.ids[0] = "gone".into();
        assert!(matches!(s.data().export(&short), Err(DatasetError::MissingFeatures(_))));
    }
}

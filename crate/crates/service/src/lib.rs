//! Annotation service: serves group photos for first-impression rating,
//! stores 1-10 scores and uploads, and reports the score distribution.
//!
//! All mutations go through one writer thread that owns the records file.
//! After every accepted write it publishes a fresh [`Dataset`] snapshot, so
//! handlers read without waiting on the writer and every acknowledged write
//! is visible to the next request.

use std::path::{Path, PathBuf};
use std::sync::{mpsc, Arc, Mutex, RwLock};
use std::thread::JoinHandle;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use grouphoto::dataset::{check_score, Dataset, DatasetConfig, DatasetError, Label, Rating, RatingAck, Source, Store};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tokio::sync::oneshot;

pub const GUIDANCE: &str = "Score this group photo from 1 (poor) to 10 (excellent) on your first impression. \
Things worth noticing: are everyone's eyes open, are faces unobstructed and turned toward the camera, \
do people look into the lens, are faces sharp, are people smiling, and is the group near the middle of the frame?";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// JSON-lines records file; created if missing.
    pub store: PathBuf,
    /// Where uploaded images are written and relative image paths resolve.
    pub image_dir: PathBuf,
    /// Built UI assets served at `/`.
    pub static_dir: Option<PathBuf>,
    pub dataset: DatasetConfig,
    /// Fixes photo sampling for tests; `None` seeds from the OS.
    pub seed: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("image directory {}: {source}", path.display())]
    ImageDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

enum Command {
    Rate(Rating, oneshot::Sender<Result<RatingAck, DatasetError>>),
    Upload(Bytes, &'static str, Source, oneshot::Sender<Result<String, DatasetError>>),
}

pub struct AppState {
    snapshot: RwLock<Arc<Dataset>>,
    writer: Mutex<Option<mpsc::Sender<Command>>>,
    image_dir: PathBuf,
    rng: Mutex<ChaCha8Rng>,
}

impl AppState {
    pub fn snapshot(&self) -> Arc<Dataset> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    fn send(&self, cmd: Command) -> Result<(), ApiError> {
        let guard = self.writer.lock().expect("writer lock");
        let tx = guard.as_ref().ok_or(ApiError::Unavailable)?;
        tx.send(cmd).map_err(|_| ApiError::Unavailable)
    }
}

/// The running writer plus the shared state handed to the router.
pub struct Service {
    pub state: Arc<AppState>,
    static_dir: Option<PathBuf>,
    writer: Option<JoinHandle<()>>,
}

impl Service {
    pub fn start(cfg: ServiceConfig) -> Result<Self, ServiceError> {
        std::fs::create_dir_all(&cfg.image_dir).map_err(|source| ServiceError::ImageDir {
            path: cfg.image_dir.clone(),
            source,
        })?;
        let store = Store::open(&cfg.store, cfg.dataset.clone())?;
        let rng = match cfg.seed {
            Some(s) => ChaCha8Rng::seed_from_u64(s),
            None => ChaCha8Rng::from_entropy(),
        };
        let state = Arc::new(AppState {
            snapshot: RwLock::new(Arc::new(store.data().clone())),
            writer: Mutex::new(None),
            image_dir: cfg.image_dir.clone(),
            rng: Mutex::new(rng),
        });
        let (tx, rx) = mpsc::channel();
        *state.writer.lock().expect("writer lock") = Some(tx);
        let shared = state.clone();
        let writer = std::thread::Builder::new()
            .name("store-writer".into())
            .spawn(move || run_writer(store, rx, &shared))
            .expect("spawn writer thread");
        Ok(Self {
            state,
            static_dir: cfg.static_dir,
            writer: Some(writer),
        })
    }

    pub fn router(&self) -> Router {
        router(self.state.clone(), self.static_dir.as_deref())
    }

    /// Stops accepting writes, drains the queue and syncs the records file.
    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.state.writer.lock().expect("writer lock").take();
        if let Some(h) = self.writer.take() {
            let _ = h.join();
        }
    }
}

impl Drop for Service {
    fn drop(&mut self) {
        self.stop();
    }
}

fn run_writer(mut store: Store, rx: mpsc::Receiver<Command>, state: &AppState) {
    let publish = |store: &Store| {
        *state.snapshot.write().expect("snapshot lock") = Arc::new(store.data().clone());
    };
    for cmd in rx {
        match cmd {
            Command::Rate(r, reply) => {
                let res = store.append_rating(r);
                if res.is_ok() {
                    publish(&store);
                }
                let _ = reply.send(res);
            }
            Command::Upload(bytes, ext, source, reply) => {
                let id = store.data().fresh_id();
                let name = format!("{id}.{ext}");
                let path = state.image_dir.join(&name);
                let res = std::fs::write(&path, &bytes)
                    .map_err(|source| DatasetError::Io { path, source })
                    .and_then(|()| store.add_photo(Some(id), name, source));
                if res.is_ok() {
                    publish(&store);
                }
                let _ = reply.send(res);
            }
        }
    }
    if let Err(e) = store.sync() {
        log::error!("final sync failed: {e}");
    }
}

#[derive(Debug)]
pub enum ApiError {
    Validation(String),
    Conflict(String),
    NotFound(String),
    Unavailable,
    Internal(String),
}

impl From<DatasetError> for ApiError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::ScoreRange(_) | DatasetError::Empty { .. } => ApiError::Validation(e.to_string()),
            DatasetError::Duplicate { .. } | DatasetError::DuplicatePhoto(_) => ApiError::Conflict(e.to_string()),
            DatasetError::UnknownPhoto(_) => ApiError::NotFound(e.to_string()),
            other => ApiError::Internal(other.to_string()),
        }
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, msg) = match self {
            ApiError::Validation(m) => (StatusCode::UNPROCESSABLE_ENTITY, m),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, m),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::Unavailable => (StatusCode::SERVICE_UNAVAILABLE, "store is shutting down".into()),
            ApiError::Internal(m) => {
                log::error!("{m}");
                (StatusCode::INTERNAL_SERVER_ERROR, m)
            }
        };
        (status, Json(ErrorBody { error: msg })).into_response()
    }
}

pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/next", get(next_photo))
        .route("/api/rating", post(rate))
        .route("/api/upload", post(upload))
        .route("/api/stats", get(stats))
        .route("/api/photo/{id}", get(photo))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

#[derive(Deserialize)]
pub struct NextQuery {
    pub rater: Option<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct NextPhoto {
    pub photo_id: String,
    pub image_url: String,
    pub rating_count: usize,
    pub guidance: String,
}

async fn next_photo(State(st): State<Arc<AppState>>, Query(q): Query<NextQuery>) -> Result<Response, ApiError> {
    let rater = q
        .rater
        .filter(|r| !r.is_empty())
        .ok_or_else(|| ApiError::Validation("query parameter `rater` is required".into()))?;
    let snap = st.snapshot();
    let pick = {
        let mut rng = st.rng.lock().expect("rng lock");
        snap.next_for(&rater, &mut *rng)
    };
    Ok(match pick {
        None => StatusCode::NO_CONTENT.into_response(),
        Some(p) => Json(NextPhoto {
            photo_id: p.id().to_string(),
            image_url: format!("/api/photo/{}", p.id()),
            rating_count: p.ratings.len(),
            guidance: GUIDANCE.to_string(),
        })
        .into_response(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RatingRequest {
    pub photo_id: String,
    #[serde(alias = "rater_id")]
    pub rater: String,
    pub score: i64,
}

async fn rate(State(st): State<Arc<AppState>>, body: Bytes) -> Result<Json<RatingAck>, ApiError> {
    let req: RatingRequest = serde_json::from_slice(&body).map_err(|e| ApiError::Validation(e.to_string()))?;
    let score = check_score(req.score)?;
    if req.rater.is_empty() {
        return Err(DatasetError::Empty { field: "rater" }.into());
    }
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let (tx, rx) = oneshot::channel();
    st.send(Command::Rate(
        Rating {
            photo_id: req.photo_id,
            rater_id: req.rater,
            score,
            timestamp,
        },
        tx,
    ))?;
    let ack = rx.await.map_err(|_| ApiError::Unavailable)??;
    Ok(Json(ack))
}

#[derive(Deserialize)]
pub struct UploadQuery {
    pub source: Option<Source>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct UploadAck {
    pub photo_id: String,
}

async fn upload(
    State(st): State<Arc<AppState>>,
    Query(q): Query<UploadQuery>,
    body: Bytes,
) -> Result<Json<UploadAck>, ApiError> {
    let format = image::guess_format(&body).map_err(|e| ApiError::Validation(format!("not an image: {e}")))?;
    let ext = format.extensions_str().first().copied().unwrap_or("img");
    let img = image::load_from_memory_with_format(&body, format)
        .map_err(|e| ApiError::Validation(format!("undecodable image: {e}")))?;
    let min = grouphoto::generic_features::MIN_INPUT_SIZE;
    if img.width() < min || img.height() < min {
        return Err(ApiError::Validation(format!(
            "image is {}x{}, below the {min}x{min} minimum",
            img.width(),
            img.height()
        )));
    }
    let (tx, rx) = oneshot::channel();
    st.send(Command::Upload(body, ext, q.source.unwrap_or(Source::SelfTaken), tx))?;
    let photo_id = rx.await.map_err(|_| ApiError::Unavailable)??;
    Ok(Json(UploadAck { photo_id }))
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Stats {
    pub photos: usize,
    pub ratings: usize,
    pub labeled: usize,
    pub good: usize,
    pub bad: usize,
    /// Proportion of labeled photos per rounded mean score 0..=10.
    pub histogram: Vec<f64>,
    pub min_raters: usize,
    pub max_raters: usize,
}

async fn stats(State(st): State<Arc<AppState>>) -> Json<Stats> {
    let snap = st.snapshot();
    let labeled = snap.labeled();
    let good = labeled.iter().filter(|(_, _, l)| *l == Label::Good).count();
    Json(Stats {
        photos: snap.photos().len(),
        ratings: snap.rating_count(),
        labeled: labeled.len(),
        good,
        bad: labeled.len() - good,
        histogram: snap.histogram().to_vec(),
        min_raters: snap.config.min_raters,
        max_raters: snap.config.max_raters,
    })
}

async fn photo(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let snap = st.snapshot();
    let rec = snap
        .get(&id)
        .ok_or_else(|| ApiError::NotFound(format!("unknown photo `{id}`")))?;
    let path = st.image_dir.join(&rec.photo.image);
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|e| ApiError::NotFound(format!("image of `{id}` unavailable: {e}")))?;
    let mime = image::ImageFormat::from_path(&path)
        .map(|f| f.to_mime_type())
        .unwrap_or("application/octet-stream");
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}

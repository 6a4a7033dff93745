//! Where face metadata comes from: a sidecar file or an HTTP service.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{parse_face_annotations, FaceError, FaceSequence};
use crate::scalar::Real;

/// HTTP face service. The image bytes are POSTed to `base_url + path`; the
/// response body must be a face-annotation document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpProviderConfig {
    pub base_url: String,
    pub path: String,
    pub timeout_ms: u64,
    /// Extra attempts after the first failure.
    pub retries: u32,
}

impl Default for HttpProviderConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8500".into(),
            path: "/faces".into(),
            timeout_ms: 10_000,
            retries: 2,
        }
    }
}

impl HttpProviderConfig {
    fn url(&self) -> String {
        format!(
            "{}/{}",
            self.base_url.trim_end_matches('/'),
            self.path.trim_start_matches('/')
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FaceProvider {
    /// Reads `<image>.faces.json` next to the image.
    Fixture,
    Http(HttpProviderConfig),
}

/// `photo.jpg` -> `photo.jpg.faces.json`
pub fn sidecar_path(image: &Path) -> PathBuf {
    let mut name = image.as_os_str().to_owned();
    name.push(".faces.json");
    PathBuf::from(name)
}

/// Fetches and parses the face sequence of one image. `frame` is the decoded
/// image size when known.
pub fn fetch_faces<T: Real>(
    image: &Path,
    frame: Option<(T, T)>,
    provider: &FaceProvider,
) -> Result<FaceSequence<T>, FaceError> {
    let document = match provider {
        FaceProvider::Fixture => {
            let sidecar = sidecar_path(image);
            match std::fs::read_to_string(&sidecar) {
                Ok(s) => s,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                    return Err(FaceError::MissingAnnotation(sidecar))
                }
                Err(source) => {
                    return Err(FaceError::Io {
                        path: sidecar,
                        source,
                    })
                }
            }
        }
        FaceProvider::Http(cfg) => {
            let bytes = std::fs::read(image).map_err(|source| FaceError::Io {
                path: image.to_path_buf(),
                source,
            })?;
            request_faces(cfg, bytes)?
        }
    };
    parse_face_annotations(&document, frame)
}

fn request_faces(cfg: &HttpProviderConfig, bytes: Vec<u8>) -> Result<String, FaceError> {
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_millis(cfg.timeout_ms))
        .build()
        .map_err(|e| FaceError::Transport {
            attempts: 0,
            message: e.to_string(),
        })?;
    let url = cfg.url();
    let attempts = cfg.retries + 1;
    let mut last = String::new();
    for attempt in 1..=attempts {
        let sent = client
            .post(&url)
            .header("content-type", "application/octet-stream")
            .body(bytes.clone())
            .send();
        match sent {
            Ok(resp) if resp.status().is_success() => {
                return resp.text().map_err(|e| FaceError::Transport {
                    attempts: attempt,
                    message: e.to_string(),
                })
            }
            Ok(resp) => last = format!("{url} returned {}", resp.status()),
            Err(e) => last = e.to_string(),
        }
        log::warn!("face service attempt {attempt}/{attempts} failed: {last}");
        if attempt < attempts {
            std::thread::sleep(Duration::from_millis(50 * u64::from(attempt)));
        }
    }
    Err(FaceError::Transport {
        attempts,
        message: last,
    })
}

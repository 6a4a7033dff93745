use std::collections::HashMap;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use grouphoto::dataset::DatasetConfig;
use grouphoto_service::{Service, ServiceConfig, Stats, UploadAck};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const RATERS: usize = 50;
const PHOTOS: usize = 20;

fn png(seed: u8) -> Vec<u8> {
    let img = image::RgbImage::from_pixel(9, 9, image::Rgb([seed, 1, 2]));
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png).unwrap();
    out.into_inner()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_raters_lose_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let svc = Service::start(ServiceConfig {
        store: dir.path().join("records.jsonl"),
        image_dir: dir.path().join("images"),
        static_dir: None,
        dataset: DatasetConfig {
            min_raters: 5,
            max_raters: 60,
            good_threshold: 6.0,
        },
        seed: Some(1),
    })
    .unwrap();
    let app = svc.router();
    let mut ids = Vec::new();
    for p in 0..PHOTOS {
        let req = Request::post("/api/upload").body(Body::from(png(p as u8))).unwrap();
        let resp = app.clone().oneshot(req).await.unwrap();
        let b = resp.into_body().collect().await.unwrap().to_bytes();
        ids.push(serde_json::from_slice::<UploadAck>(&b).unwrap().photo_id);
    }

    // Every (rater, photo) pair is posted twice at once.
    let mut tasks = Vec::new();
    for r in 0..RATERS {
        for (p, id) in ids.iter().enumerate() {
            for _ in 0..2 {
                let app = app.clone();
                let body = json!({"photo_id": id, "rater": format!("r{r}"), "score": 1 + (r + p) % 10}).to_string();
                tasks.push(tokio::spawn(async move {
                    let req = Request::post("/api/rating").body(Body::from(body)).unwrap();
                    let resp = app.oneshot(req).await.unwrap();
                    let status = resp.status();
                    let b = resp.into_body().collect().await.unwrap().to_bytes();
                    (status, serde_json::from_slice::<Value>(&b).unwrap())
                }));
            }
        }
    }
    let mut ok = 0;
    let mut conflicts = 0;
    let mut by_count: HashMap<(String, u64), bool> = HashMap::new();
    for t in tasks {
        let (status, v) = t.await.unwrap();
        match status {
            StatusCode::OK => {
                ok += 1;
                let key = (v["photo_id"].as_str().unwrap().to_string(), v["count"].as_u64().unwrap());
                assert!(by_count.insert(key, !v["label"].is_null()).is_none(), "count reported twice");
            }
            StatusCode::CONFLICT => conflicts += 1,
            s => panic!("unexpected status {s}"),
        }
    }
    assert_eq!(ok, RATERS * PHOTOS);
    assert_eq!(conflicts, RATERS * PHOTOS);
    for ((_, count), labeled) in &by_count {
        assert_eq!(*labeled, *count >= 5, "count {count}");
    }

    let resp = app.clone().oneshot(Request::get("/api/stats").body(Body::empty()).unwrap()).await.unwrap();
    let st: Stats = serde_json::from_slice(&resp.into_body().collect().await.unwrap().to_bytes()).unwrap();
    assert_eq!(st.ratings, RATERS * PHOTOS);
    assert_eq!(st.labeled, PHOTOS);
    assert!((st.histogram.iter().sum::<f64>() - 1.0).abs() < 1e-9);

    svc.shutdown();
    let reloaded = grouphoto::dataset::Store::open(&dir.path().join("records.jsonl"), DatasetConfig::default()).unwrap();
    assert_eq!(reloaded.data().rating_count(), RATERS * PHOTOS);
}

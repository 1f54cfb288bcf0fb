#![allow(dead_code)]

use std::path::Path;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use feva_core::server::{router, AppState, ServerConfig};

pub struct TestServer {
    pub dir: tempfile::TempDir,
    pub state: AppState,
    pub app: Router,
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: axum::http::HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body)
            .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(name).and_then(|v| v.to_str().ok())
    }
}

/// Deterministic pseudo-random media bytes.
pub fn media_bytes(len: usize, seed: u64) -> Vec<u8> {
    use rand::{RngCore, SeedableRng};
    let mut out = vec![0; len];
    rand_chacha::ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut out);
    out
}

pub fn project_json() -> Value {
    json!({
        "id": "demo",
        "name": "Demo",
        "sources": [{
            "id": "front", "uri": "front.mp4", "fps": {"num": 25, "den": 1},
            "duration": 60000000, "offset": 0, "width": 640, "height": 360
        }],
        "primary_source_id": "front",
        "dataset_refs": ["main"]
    })
}

impl TestServer {
    /// A server over a temp media root holding `front.mp4` (`media_len` bytes), with project `demo` created.
    pub async fn start(media_len: usize, extractor: Option<String>) -> TestServer {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("front.mp4"), media_bytes(media_len, 7)).unwrap();
        let mut cfg = ServerConfig::new(dir.path());
        cfg.extractor = extractor;
        let state = AppState::new(cfg);
        let app = router(state.clone());
        let server = TestServer { dir, state, app };
        let r = server
            .send(
                "POST",
                "/api/projects",
                &[],
                Some(project_json().to_string()),
            )
            .await;
        assert_eq!(
            r.status,
            StatusCode::CREATED,
            "{}",
            String::from_utf8_lossy(&r.body)
        );
        server
    }

    pub fn media_path(&self) -> std::path::PathBuf {
        self.dir.path().join("front.mp4")
    }

    pub fn data_dir(&self) -> &Path {
        self.state.store().root()
    }

    pub async fn send(
        &self,
        method: &str,
        uri: &str,
        headers: &[(&str, &str)],
        body: Option<String>,
    ) -> Reply {
        let mut req = Request::builder().method(method).uri(uri);
        for (k, v) in headers {
            req = req.header(*k, *v);
        }
        let req = req.body(body.map_or_else(Body::empty, Body::from)).unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let headers = resp.headers().clone();
        let body = resp
            .into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec();
        Reply {
            status,
            headers,
            body,
        }
    }

    pub async fn get(&self, uri: &str) -> Reply {
        self.send("GET", uri, &[], None).await
    }

    pub async fn range(&self, uri: &str, range: &str) -> Reply {
        self.send("GET", uri, &[("range", range)], None).await
    }

    pub async fn post_edits(&self, base: u64, edits: Value) -> Reply {
        let body = json!({"base_revision": base, "edits": edits}).to_string();
        self.send(
            "POST",
            "/api/projects/demo/datasets/main/edits",
            &[],
            Some(body),
        )
        .await
    }
}

/// A `Create` edit for the default track and type.
pub fn create(start: u64, end: u64) -> Value {
    json!({"op": "create", "label": {"track_id": "track-1", "type_id": "event", "start": start, "end": end}})
}

//! HTTP service: projects, datasets with optimistic revisions, media
//! streaming with byte ranges, thumbnails and the user config.
//!
//! | Method | Path | |
//! |---|---|---|
//! | GET, POST | `/api/projects` | list / create |
//! | GET | `/api/projects/{p}` | project document |
//! | GET, PUT | `/api/projects/{p}/datasets/{d}` | native dataset document |
//! | POST | `/api/projects/{p}/datasets/{d}/edits` | `{base_revision, edits}` |
//! | GET | `/media/{source}` | range streaming |
//! | GET | `/media/{source}/thumb?t=<µs>&w=<px>` | frame thumbnail |
//! | GET, PUT | `/api/config` | keymap, reaction and transport settings |

pub mod range;
pub mod store;
pub mod thumb;

use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::io::{AsyncReadExt, AsyncSeekExt};
use tokio_util::io::ReaderStream;

use crate::annotator::{apply_batch, Edit};
use crate::error::Error;
use crate::keymap::{load_config, save_config, Config};
use crate::model::{Project, TimePoint, VideoSource};
use crate::persistence::{load_dataset, save_dataset};

pub use range::{handle_range_request, plan_range, RangePlan, RangeResponse};
pub use store::{Store, StoreError};
pub use thumb::{ThumbError, Thumbnailer};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub media_root: PathBuf,
    pub data_dir: PathBuf,
    /// Frame extractor command template.
    pub extractor: Option<String>,
}

impl ServerConfig {
    /// Data lives in `<media_root>/projects` unless set otherwise.
    pub fn new(media_root: impl Into<PathBuf>) -> Self {
        let media_root = media_root.into();
        ServerConfig {
            data_dir: media_root.join("projects"),
            media_root,
            extractor: None,
        }
    }
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

struct Inner {
    media_root: PathBuf,
    store: Store,
    thumbs: Thumbnailer,
    config_lock: tokio::sync::Mutex<()>,
}

impl AppState {
    pub fn new(cfg: ServerConfig) -> Self {
        AppState(Arc::new(Inner {
            media_root: cfg.media_root,
            store: Store::new(cfg.data_dir),
            thumbs: Thumbnailer::new(cfg.extractor),
            config_lock: tokio::sync::Mutex::new(()),
        }))
    }

    pub fn store(&self) -> &Store {
        &self.0.store
    }

    pub fn thumbnailer(&self) -> &Thumbnailer {
        &self.0.thumbs
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/projects", get(list_projects).post(create_project))
        .route("/api/projects/{p}", get(get_project))
        .route(
            "/api/projects/{p}/datasets/{d}",
            get(get_dataset).put(put_dataset),
        )
        .route("/api/projects/{p}/datasets/{d}/edits", post(post_edits))
        .route("/media/{source}", get(get_media))
        .route("/media/{source}/thumb", get(get_thumb))
        .route("/api/config", get(get_config).put(put_config))
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: json!({"error": code, "message": message.into()}),
        }
    }

    fn not_found(what: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", what)
    }

    fn engine(status: StatusCode, e: &Error) -> Self {
        ApiError::new(status, e.code(), e.to_string())
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        tracing::error!("{e}");
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(what) => ApiError::not_found(what),
            StoreError::BadId(_) => {
                ApiError::new(StatusCode::NOT_FOUND, "not_found", e.to_string())
            }
            StoreError::Exists(_) => ApiError::new(StatusCode::CONFLICT, "exists", e.to_string()),
            StoreError::Engine(e) => ApiError::engine(StatusCode::UNPROCESSABLE_ENTITY, &e),
            StoreError::Io(e) => ApiError::internal(e),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, axum::Json(self.body)).into_response()
    }
}

type ApiResult<T = Response> = Result<T, ApiError>;

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, StoreError> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(ApiError::internal)?
        .map_err(ApiError::from)
}

fn json_bytes(status: StatusCode, bytes: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

fn pretty(v: &impl serde::Serialize) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("serialization is infallible");
    out.push(b'\n');
    out
}

async fn list_projects(State(s): State<AppState>) -> ApiResult {
    let projects = blocking(move || s.store().list_projects()).await?;
    let summary: Vec<Value> = projects
        .iter()
        .map(|p| json!({"id": p.id, "name": p.name, "datasets": p.dataset_refs}))
        .collect();
    Ok(json_bytes(StatusCode::OK, pretty(&summary)))
}

async fn create_project(State(s): State<AppState>, body: Bytes) -> ApiResult {
    let project: Project = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_document", e.to_string()))?;
    let out = pretty(&project);
    blocking(move || s.store().create_project(&project)).await?;
    Ok(json_bytes(StatusCode::CREATED, out))
}

async fn get_project(State(s): State<AppState>, UrlPath(p): UrlPath<String>) -> ApiResult {
    let project = blocking(move || s.store().load_project(&p)).await?;
    Ok(json_bytes(StatusCode::OK, pretty(&project)))
}

async fn get_dataset(
    State(s): State<AppState>,
    UrlPath((p, d)): UrlPath<(String, String)>,
) -> ApiResult {
    let dataset = blocking(move || s.store().load_dataset(&p, &d)).await?;
    Ok(json_bytes(StatusCode::OK, save_dataset(&dataset)))
}

/// Replaces a dataset document. The body's `revision` must equal the stored
/// one; the stored copy gets the next revision. New datasets keep theirs.
async fn put_dataset(
    State(s): State<AppState>,
    UrlPath((p, d)): UrlPath<(String, String)>,
    body: Bytes,
) -> ApiResult {
    let mut incoming =
        load_dataset(&body).map_err(|e| ApiError::engine(StatusCode::UNPROCESSABLE_ENTITY, &e))?;
    let project = {
        let (s, p) = (s.clone(), p.clone());
        blocking(move || s.store().load_project(&p)).await?
    };
    let duration = project.primary_source().duration;
    let report = crate::model::validate_dataset_within(&incoming, duration);
    report
        .into_result()
        .map_err(|e| ApiError::engine(StatusCode::UNPROCESSABLE_ENTITY, &e))?;
    let lock = s.store().lock(&p, &d);
    let _guard = lock.lock().await;
    let current = {
        let (s, p, d) = (s.clone(), p.clone(), d.clone());
        match blocking(move || s.store().load_dataset(&p, &d)).await {
            Ok(ds) => Some(ds.revision),
            Err(e) if e.status == StatusCode::NOT_FOUND => None,
            Err(e) => return Err(e),
        }
    };
    let created = current.is_none();
    if let Some(rev) = current {
        if incoming.revision != rev {
            return Err(conflict(rev));
        }
        incoming.revision = rev + 1;
    }
    let revision = incoming.revision;
    blocking(move || s.store().write_dataset(&p, &d, &incoming)).await?;
    let status = if created {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok(json_bytes(
        status,
        pretty(&json!({"new_revision": revision})),
    ))
}

fn conflict(current: u64) -> ApiError {
    ApiError {
        status: StatusCode::CONFLICT,
        body: json!({"error": "conflict", "current_revision": current}),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EditBatch {
    base_revision: u64,
    edits: Vec<Edit>,
}

/// Applies a batch of edits all-or-nothing. An accepted batch counts as one revision.
async fn post_edits(
    State(s): State<AppState>,
    UrlPath((p, d)): UrlPath<(String, String)>,
    body: Bytes,
) -> ApiResult {
    let batch: EditBatch = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_document", e.to_string()))?;
    let project = {
        let (s, p) = (s.clone(), p.clone());
        blocking(move || s.store().load_project(&p)).await?
    };
    let duration = project.primary_source().duration;
    let lock = s.store().lock(&p, &d);
    let _guard = lock.lock().await;
    let current = {
        let (s, p, d) = (s.clone(), p.clone(), d.clone());
        blocking(move || s.store().load_dataset(&p, &d)).await?
    };
    if current.revision != batch.base_revision {
        return Err(conflict(current.revision));
    }
    let (mut next, _) =
        apply_batch(&current, &batch.edits, duration).map_err(|(index, e)| ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            body: json!({"error": e.code(), "message": e.to_string(), "index": index}),
        })?;
    next.revision = current.revision + 1;
    let revision = next.revision;
    blocking(move || s.store().write_dataset(&p, &d, &next)).await?;
    Ok(json_bytes(
        StatusCode::OK,
        pretty(&json!({"new_revision": revision})),
    ))
}

/// Resolves a media path below the media root, refusing anything that could escape it.
fn media_path(root: &Path, relative: &str) -> Option<PathBuf> {
    let rel = Path::new(relative);
    rel.components()
        .all(|c| matches!(c, Component::Normal(_)))
        .then(|| root.join(rel))
}

/// A source id known to a project, or else a file name under the media root.
async fn resolve_media(s: &AppState, source: &str) -> ApiResult<(Option<VideoSource>, PathBuf)> {
    let found = {
        let (s, id) = (s.clone(), source.to_string());
        blocking(move || s.store().find_source(&id)).await?
    };
    let rel = found.as_ref().map_or(source, |v| v.uri.as_str());
    let path = media_path(&s.0.media_root, rel)
        .ok_or_else(|| ApiError::not_found(format!("media `{source}`")))?;
    Ok((found, path))
}

fn content_type(path: &Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("mp4" | "m4v") => "video/mp4",
        Some("webm") => "video/webm",
        Some("mkv") => "video/x-matroska",
        Some("mov") => "video/quicktime",
        Some("ogv") => "video/ogg",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("png") => "image/png",
        _ => "application/octet-stream",
    }
}

async fn get_media(
    State(s): State<AppState>,
    UrlPath(source): UrlPath<String>,
    headers: HeaderMap,
) -> ApiResult {
    let (_, path) = resolve_media(&s, &source).await?;
    let mut file = match tokio::fs::File::open(&path).await {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(ApiError::not_found(format!("media `{source}`")))
        }
        Err(e) => return Err(ApiError::internal(e)),
    };
    let meta = file.metadata().await.map_err(ApiError::internal)?;
    if !meta.is_file() {
        return Err(ApiError::not_found(format!("media `{source}`")));
    }
    let size = meta.len();
    let plan = plan_range(
        headers.get(header::RANGE).and_then(|v| v.to_str().ok()),
        size,
    );
    let (offset, len) = plan.span(size);
    file.seek(std::io::SeekFrom::Start(offset))
        .await
        .map_err(ApiError::internal)?;
    let body = Body::from_stream(ReaderStream::new(file.take(len)));
    let mut resp = Response::new(body);
    *resp.status_mut() = StatusCode::from_u16(plan.status()).expect("valid status");
    let h = resp.headers_mut();
    h.insert(header::ACCEPT_RANGES, HeaderValue::from_static("bytes"));
    h.insert(header::CONTENT_LENGTH, HeaderValue::from(len));
    if plan != RangePlan::Unsatisfiable {
        h.insert(
            header::CONTENT_TYPE,
            HeaderValue::from_static(content_type(&path)),
        );
    }
    if let Some(cr) = plan.content_range(size) {
        h.insert(
            header::CONTENT_RANGE,
            HeaderValue::from_str(&cr).expect("ascii header"),
        );
    }
    Ok(resp)
}

#[derive(Deserialize)]
struct ThumbQuery {
    t: u64,
    #[serde(default = "default_thumb_width")]
    w: u32,
}

fn default_thumb_width() -> u32 {
    160
}

async fn get_thumb(
    State(s): State<AppState>,
    UrlPath(source): UrlPath<String>,
    Query(q): Query<ThumbQuery>,
) -> ApiResult {
    if q.w == 0 || q.w > 4096 {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "bad_request",
            "w must be in 1..=4096",
        ));
    }
    let (found, path) = resolve_media(&s, &source).await?;
    let video = found.ok_or_else(|| ApiError::not_found(format!("source `{source}`")))?;
    match s
        .thumbnailer()
        .get(&video, &path, TimePoint(q.t), q.w)
        .await
    {
        Ok(bytes) => Ok((
            [(header::CONTENT_TYPE, "image/jpeg")],
            bytes.as_ref().clone(),
        )
            .into_response()),
        Err(ThumbError::NotConfigured) => Err(ApiError::new(
            StatusCode::NOT_IMPLEMENTED,
            "extractor_not_configured",
            ThumbError::NotConfigured.to_string(),
        )),
        Err(e @ ThumbError::Failed(_)) => Err(ApiError::new(
            StatusCode::BAD_GATEWAY,
            "extraction_failed",
            e.to_string(),
        )),
    }
}

async fn get_config(State(s): State<AppState>) -> ApiResult {
    let path = s.store().config_path();
    let config = blocking(move || match std::fs::read(&path) {
        Ok(bytes) => Ok(load_config(&bytes)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Config::default()),
        Err(e) => Err(e.into()),
    })
    .await?;
    Ok(json_bytes(StatusCode::OK, save_config(&config)))
}

async fn put_config(State(s): State<AppState>, body: Bytes) -> ApiResult {
    let config =
        load_config(&body).map_err(|e| ApiError::engine(StatusCode::UNPROCESSABLE_ENTITY, &e))?;
    let bytes = save_config(&config);
    let _guard = s.0.config_lock.lock().await;
    let path = s.store().config_path();
    let out = bytes.clone();
    blocking(move || Ok(store::write_atomic(&path, &out)?)).await?;
    Ok(json_bytes(StatusCode::OK, bytes))
}

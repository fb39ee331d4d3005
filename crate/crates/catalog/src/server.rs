use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::store::{Store, StoreError};

pub const DEFAULT_BIND_ADDR: &str = "127.0.0.1:8787";
pub const DEFAULT_STORE_DIR: &str = "narralive-store";
/// Largest accepted bundle upload.
pub const MAX_BUNDLE_BYTES: usize = 512 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub store_dir: PathBuf,
    pub bind_addr: SocketAddr,
}

impl Config {
    /// Reads `NARRALIVE_STORE_DIR` and `NARRALIVE_BIND_ADDR`.
    pub fn from_env() -> Result<Config, String> {
        let store_dir = std::env::var_os("NARRALIVE_STORE_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_STORE_DIR));
        let addr = std::env::var("NARRALIVE_BIND_ADDR").unwrap_or_else(|_| DEFAULT_BIND_ADDR.to_string());
        let bind_addr = addr.parse().map_err(|e| format!("NARRALIVE_BIND_ADDR `{addr}`: {e}"))?;
        Ok(Config { store_dir, bind_addr })
    }
}

struct ApiError(StoreError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = match &self.0 {
            StoreError::VersionConflict { .. } => (StatusCode::CONFLICT, "version_conflict"),
            StoreError::InvalidBundle(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_bundle"),
            StoreError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            StoreError::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "io"),
        };
        if status.is_server_error() {
            tracing::error!(error = %self.0, "request failed");
        }
        (status, Json(json!({ "error": code, "message": self.0.to_string() }))).into_response()
    }
}

type Shared = Arc<Store>;

async fn blocking<T, F>(store: Shared, f: F) -> Result<T, ApiError>
where
    F: FnOnce(&Store) -> Result<T, StoreError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&store))
        .await
        .map_err(|e| ApiError(StoreError::Io(std::io::Error::other(e))))?
        .map_err(ApiError)
}

async fn list(State(store): State<Shared>) -> Result<Response, ApiError> {
    Ok(Json(blocking(store, |s| s.list()).await?).into_response())
}

async fn manifest(State(store): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(blocking(store, move |s| s.manifest(&id)).await?).into_response())
}

async fn version(State(store): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(blocking(store, move |s| s.version(&id)).await?).into_response())
}

#[derive(Deserialize)]
struct BundleQuery {
    version: Option<u64>,
}

async fn bundle(
    State(store): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<BundleQuery>,
) -> Result<Response, ApiError> {
    let bytes = blocking(store, move |s| s.bundle(&id, q.version)).await?;
    Ok(([(header::CONTENT_TYPE, "application/zip")], bytes).into_response())
}

async fn asset(State(store): State<Shared>, Path((id, path)): Path<(String, String)>) -> Result<Response, ApiError> {
    let ct = content_type(&path);
    let bytes = blocking(store, move |s| s.asset(&id, &path)).await?;
    Ok(([(header::CONTENT_TYPE, ct)], bytes).into_response())
}

async fn publish(State(store): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let entry = blocking(store, move |s| s.publish(&body)).await?;
    Ok((StatusCode::CREATED, Json(entry)).into_response())
}

/// Media type for an asset path, by extension.
pub fn content_type(path: &str) -> &'static str {
    let ext = path
        .rsplit_once('.')
        .map(|(_, e)| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "png" => "image/png",
        "jpg" | "jpeg" => "image/jpeg",
        "gif" => "image/gif",
        "webp" => "image/webp",
        "svg" => "image/svg+xml",
        "mp3" => "audio/mpeg",
        "ogg" | "oga" => "audio/ogg",
        "wav" => "audio/wav",
        "m4a" => "audio/mp4",
        "mp4" | "m4v" => "video/mp4",
        "webm" => "video/webm",
        "json" => "application/json",
        "txt" => "text/plain; charset=utf-8",
        _ => "application/octet-stream",
    }
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/api/experiences", get(list).post(publish))
        .route("/api/experiences/{id}", get(manifest))
        .route("/api/experiences/{id}/version", get(version))
        .route("/api/experiences/{id}/bundle", get(bundle))
        .route("/api/experiences/{id}/assets/{*path}", get(asset))
        .layer(DefaultBodyLimit::max(MAX_BUNDLE_BYTES))
        .with_state(store)
}

/// Serves the catalog on an already bound listener until `shutdown`
/// resolves.
pub async fn serve_with_shutdown(
    listener: tokio::net::TcpListener,
    store: Arc<Store>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(store))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Binds `config.bind_addr` and serves until Ctrl-C.
pub async fn serve(config: &Config) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let store = Arc::new(Store::open(&config.store_dir)?);
    let listener = tokio::net::TcpListener::bind(config.bind_addr).await?;
    tracing::info!(addr = %listener.local_addr()?, store = %config.store_dir.display(), "catalog listening");
    serve_with_shutdown(listener, store, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    Ok(())
}

/// A catalog server running on a background thread, for tests and tools.
pub struct Running {
    pub addr: SocketAddr,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl Running {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for Running {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Starts a server for `store` on `addr` (use port 0 for any free port).
pub fn spawn(store: Arc<Store>, addr: SocketAddr) -> std::io::Result<Running> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind(addr))?;
    let addr = listener.local_addr()?;
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        let _ = rt.block_on(serve_with_shutdown(listener, store, async {
            let _ = rx.await;
        }));
    });
    Ok(Running {
        addr,
        stop: Some(tx),
        thread: Some(thread),
    })
}

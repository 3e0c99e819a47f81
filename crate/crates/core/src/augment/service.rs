//! HTTP service handing out augmented pairs to training loops.
//!
//! | route                | response                                  |
//! |----------------------|-------------------------------------------|
//! | `GET /health`        | `200 ok`                                  |
//! | `GET /config`        | the `AugmentConfig` as JSON               |
//! | `GET /sample?index=i`| zip of sample `i` (regenerated)           |
//! | `GET /fresh?seed=s`  | zip of a new draw keyed by `s`            |
//!
//! Errors come back as `{"error": "..."}` with status 400 (malformed query)
//! or 404 (index out of range).

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use tokio::net::TcpListener;

use super::Dataset;
use crate::error::{Error, Result};

pub const ZIP_CONTENT_TYPE: &str = "application/zip";

pub fn router(dataset: Arc<Dataset>) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/config", get(config))
        .route("/sample", get(sample))
        .route("/fresh", get(fresh))
        .with_state(dataset)
}

/// A bound but not yet running service.
pub struct SampleServer {
    listener: TcpListener,
    router: Router,
}

impl SampleServer {
    pub async fn bind(dataset: Dataset, addr: &str) -> Result<Self> {
        let listener = TcpListener::bind(addr)
            .await
            .map_err(|source| Error::Bind {
                addr: addr.to_string(),
                source,
            })?;
        Ok(Self {
            listener,
            router: router(Arc::new(dataset)),
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        self.listener
            .local_addr()
            .map_err(|e| Error::io("<listener>", e))
    }

    pub async fn run(self) -> Result<()> {
        axum::serve(self.listener, self.router)
            .await
            .map_err(|e| Error::io("<server>", e))
    }
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({ "error": msg.into() }))).into_response()
}

fn parse_u64(q: &HashMap<String, String>, key: &str) -> std::result::Result<u64, String> {
    let raw = q
        .get(key)
        .ok_or_else(|| format!("missing `{key}` parameter"))?;
    raw.parse::<u64>()
        .map_err(|_| format!("`{key}` must be a non-negative integer, got `{raw}`"))
}

fn zip_response(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, ZIP_CONTENT_TYPE)], bytes).into_response()
}

fn internal(e: Error) -> Response {
    match e {
        Error::IndexOutOfRange { .. } => error(StatusCode::NOT_FOUND, e.to_string()),
        other => error(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
    }
}

async fn config(State(ds): State<Arc<Dataset>>) -> Response {
    Json(ds.config().clone()).into_response()
}

async fn sample(
    State(ds): State<Arc<Dataset>>,
    Query(q): Query<HashMap<String, String>>,
) -> Response {
    let index = match parse_u64(&q, "index") {
        Ok(v) => v as usize,
        Err(msg) => return error(StatusCode::BAD_REQUEST, msg),
    };
    let job = tokio::task::spawn_blocking(move || {
        let pair = ds.get_sample(index)?;
        ds.encode_pair(&pair)
    });
    match job.await {
        Ok(Ok(bytes)) => zip_response(bytes),
        Ok(Err(e)) => internal(e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn fresh(
    State(ds): State<Arc<Dataset>>,
    Query(q): Query<HashMap<String, String>>,
) -> Response {
    let seed = match parse_u64(&q, "seed") {
        Ok(v) => v,
        Err(msg) => return error(StatusCode::BAD_REQUEST, msg),
    };
    let job = tokio::task::spawn_blocking(move || {
        let (pair, _) = ds.fresh(seed)?;
        ds.encode_pair(&pair)
    });
    match job.await {
        Ok(Ok(bytes)) => zip_response(bytes),
        Ok(Err(e)) => internal(e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

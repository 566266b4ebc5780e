//! HTTP front end of the judgment store.
//!
//! * `GET /batches/{id}/next?annotator=` returns the next unjudged item, or
//!   204 when the annotator is done.
//! * `POST /judgments` takes `{"annotator", "pair_id", "marked"}`.
//! * `GET /batches/{id}/report` returns the agreement report.
//! * `POST /batches/{id}/close` stops accepting judgments for a batch.
//!
//! Writes are serialized behind one lock, so every report sees a consistent
//! prefix of the log.

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use pgtask_core::annotation::{self, Judgment, JudgmentStore};
use pgtask_core::Error;

type Shared = Arc<Mutex<JudgmentStore>>;

#[derive(Debug)]
struct ApiError(StatusCode, String);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::UnknownBatch(_) | Error::UnknownPair(_) => StatusCode::NOT_FOUND,
            Error::ClosedBatch(_) => StatusCode::CONFLICT,
            Error::InvalidInput(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

#[derive(Debug, Deserialize)]
struct NextQuery {
    annotator: Option<String>,
}

#[derive(Debug, Deserialize)]
struct JudgmentBody {
    annotator: String,
    pair_id: String,
    marked: bool,
    /// Milliseconds since the epoch; the server clock when absent.
    timestamp: Option<u64>,
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn lock(store: &Shared) -> std::sync::MutexGuard<'_, JudgmentStore> {
    store.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

async fn next_item(
    State(store): State<Shared>,
    Path(batch): Path<String>,
    Query(q): Query<NextQuery>,
) -> Result<Response, ApiError> {
    let annotator = q
        .annotator
        .filter(|a| !a.trim().is_empty())
        .ok_or_else(|| ApiError(StatusCode::BAD_REQUEST, "annotator query parameter is required".into()))?;
    match lock(&store).next_item(&batch, &annotator)? {
        Some(item) => Ok(Json(item).into_response()),
        None => Ok(StatusCode::NO_CONTENT.into_response()),
    }
}

async fn post_judgment(State(store): State<Shared>, Json(body): Json<JudgmentBody>) -> Result<Response, ApiError> {
    if body.annotator.trim().is_empty() {
        return Err(ApiError(StatusCode::BAD_REQUEST, "annotator must be non-empty".into()));
    }
    let ack = lock(&store).record_judgment(Judgment {
        annotator: body.annotator,
        pair_id: body.pair_id,
        marked: body.marked,
        timestamp: body.timestamp.unwrap_or_else(now_millis),
    })?;
    Ok(Json(ack).into_response())
}

async fn get_report(State(store): State<Shared>, Path(batch): Path<String>) -> Result<Response, ApiError> {
    let report = annotation::report(&lock(&store), &batch)?;
    Ok(Json(report).into_response())
}

async fn close_batch(State(store): State<Shared>, Path(batch): Path<String>) -> Result<Response, ApiError> {
    lock(&store).close_batch(&batch)?;
    Ok(Json(json!({ "batch": batch, "closed": true })).into_response())
}

pub fn router(store: JudgmentStore) -> Router {
    router_shared(Arc::new(Mutex::new(store)))
}

/// Router over a store the caller keeps a handle to.
pub fn router_shared(store: Arc<Mutex<JudgmentStore>>) -> Router {
    Router::new()
        .route("/batches/{id}/next", get(next_item))
        .route("/batches/{id}/report", get(get_report))
        .route("/batches/{id}/close", post(close_batch))
        .route("/judgments", post(post_judgment))
        .with_state(store)
}

/// Serves until ctrl-c.
pub async fn serve(store: JudgmentStore, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    println!("annotation service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

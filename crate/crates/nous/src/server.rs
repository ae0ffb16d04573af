//! HTTP API. Readers share one published [`View`]; ingestion goes through a
//! single writer and is refused with 409 while another write is running.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::body::{to_bytes, Body};
use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use nous_core::views::render;
use nous_core::{Engine, Error, PathRequest, View};
use serde::Serialize;
use tokio::sync::Mutex;

pub const JSON_CONTENT_TYPE: &str = "application/json; charset=utf-8";

/// Largest accepted ingest body.
const MAX_INGEST_BYTES: usize = 64 * 1024 * 1024;

pub struct AppState {
    view: RwLock<View>,
    pub writer: Arc<Mutex<Engine>>,
}

impl AppState {
    pub fn new(engine: Engine) -> Arc<Self> {
        Arc::new(AppState {
            view: RwLock::new(engine.view()),
            writer: Arc::new(Mutex::new(engine)),
        })
    }

    /// The currently published snapshot.
    pub fn view(&self) -> View {
        self.view.read().expect("view lock").clone()
    }

    fn publish(&self, view: View) {
        *self.view.write().expect("view lock") = view;
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    detail: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    suggestions: Option<&'a [String]>,
}

/// Error reply: status plus an `{error, detail, suggestions?}` body.
#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    name: &'static str,
    detail: String,
    suggestions: Option<Vec<String>>,
}

impl ApiError {
    fn new(status: StatusCode, name: &'static str, detail: impl Into<String>) -> Self {
        ApiError {
            status,
            name,
            detail: detail.into(),
            suggestions: None,
        }
    }

    fn bad_request(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "InvalidArgument", detail)
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        ApiError::new(status_for(&err), err.name(), detail(&err))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json(
            self.status,
            render(&ErrorBody {
                error: self.name,
                detail: &self.detail,
                suggestions: self.suggestions.as_deref(),
            }),
        )
    }
}

type ApiResult = Result<Response, ApiError>;

fn json(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, JSON_CONTENT_TYPE)], body).into_response()
}

fn ok<T: Serialize + ?Sized>(value: &T) -> ApiResult {
    Ok(json(StatusCode::OK, render(value)))
}

pub fn status_for(err: &Error) -> StatusCode {
    match err {
        Error::UnknownEntity(_) | Error::UnknownPredicate(_) | Error::NoPathFound(_) => StatusCode::NOT_FOUND,
        Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

/// The message without its leading `Name: `.
pub fn detail(err: &Error) -> String {
    let text = err.to_string();
    let prefix = format!("{}: ", err.name());
    text.strip_prefix(&prefix).map(str::to_string).unwrap_or(text)
}

type Params = Result<Query<HashMap<String, String>>, QueryRejection>;

fn params(q: Params) -> Result<HashMap<String, String>, ApiError> {
    q.map(|Query(m)| m).map_err(|e| ApiError::bad_request(e.body_text()))
}

fn required(p: &HashMap<String, String>, key: &str) -> Result<String, ApiError> {
    p.get(key)
        .cloned()
        .ok_or_else(|| ApiError::bad_request(format!("missing query parameter {key:?}")))
}

fn count(p: &HashMap<String, String>, key: &str) -> Result<Option<usize>, ApiError> {
    match p.get(key).map(|v| v.trim()).filter(|v| !v.is_empty()) {
        None => Ok(None),
        Some(v) => match v.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(ApiError::bad_request(format!("{key} must be a positive integer, got {v:?}"))),
        },
    }
}

async fn entity(State(state): State<Arc<AppState>>, q: Params) -> ApiResult {
    let name = required(&params(q)?, "name")?;
    let view = state.view();
    match view.entity_card(&name) {
        Ok(card) => ok(&card),
        Err(e @ Error::UnknownEntity(_)) => Err(ApiError {
            suggestions: Some(view.suggestions(&name, 5)),
            ..e.into()
        }),
        Err(e) => Err(e.into()),
    }
}

fn path_request(p: &HashMap<String, String>) -> Result<PathRequest, ApiError> {
    Ok(PathRequest {
        from: required(p, "from")?,
        to: required(p, "to")?,
        rel: p.get("rel").cloned(),
        k: count(p, "k")?,
        max_hops: count(p, "maxHops")?,
    })
}

async fn paths(State(state): State<Arc<AppState>>, q: Params) -> ApiResult {
    let req = path_request(&params(q)?)?;
    ok(&state.view().paths(&req)?)
}

async fn trending(State(state): State<Arc<AppState>>) -> ApiResult {
    ok(&state.view().trending())
}

async fn stats(State(state): State<Arc<AppState>>) -> ApiResult {
    ok(&state.view().stats())
}

async fn ingest(State(state): State<Arc<AppState>>, body: Body) -> ApiResult {
    // Claim the writer before reading the body so overlapping uploads see 409.
    let mut engine = state
        .writer
        .clone()
        .try_lock_owned()
        .map_err(|_| ApiError::new(StatusCode::CONFLICT, "WriteInProgress", "another ingest is running"))?;
    let bytes = to_bytes(body, MAX_INGEST_BYTES)
        .await
        .map_err(|e| ApiError::bad_request(format!("could not read body: {e}")))?;
    let published = state.clone();
    let report = tokio::task::spawn_blocking(move || {
        let result = engine.ingest_reader(&bytes[..]);
        let saved = engine.save();
        published.publish(engine.view());
        result.and_then(|report| saved.map(|()| report))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))??;
    ok(&report)
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint")
}

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/entity", get(entity))
        .route("/paths", get(paths))
        .route("/trending", get(trending))
        .route("/stats", get(stats))
        .route("/ingest", post(ingest))
        .fallback(not_found);
    Router::new().nest("/api", api).with_state(state)
}

/// Binds `addr` and serves until interrupted.
pub async fn serve(engine: Engine, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("nous listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(engine)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

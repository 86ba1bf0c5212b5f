//! JSON-over-HTTP access to a single workbench session.
//!
//! Reads take a shared lock on the session; `select`, `transform` and `load`
//! take the write lock only to swap in results computed beforehand.

pub mod error;
pub mod session;

use std::net::SocketAddr;
use std::sync::{Arc, RwLock, RwLockReadGuard};

use axum::extract::{Path, Query, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tsprobe_core::{histogram, HistogramAxis, Metric, Split};

pub use error::{ApiError, ApiResult};
pub use session::{LoadRequest, Session};

/// Environment variable naming the listening port.
pub const PORT_ENV: &str = "TSPROBE_PORT";
pub const DEFAULT_PORT: u16 = 8080;
/// Single-session service; the id is reported so clients can pin it later.
pub const SESSION_ID: &str = "default";

#[derive(Clone, Default)]
pub struct AppState {
    session: Arc<RwLock<Option<Session>>>,
}

impl AppState {
    pub fn new(session: Option<Session>) -> Self {
        Self {
            session: Arc::new(RwLock::new(session)),
        }
    }

    fn read(&self) -> RwLockReadGuard<'_, Option<Session>> {
        self.session.read().unwrap_or_else(|e| e.into_inner())
    }

    fn with_session<T>(&self, f: impl FnOnce(&Session) -> ApiResult<T>) -> ApiResult<T> {
        match self.read().as_ref() {
            Some(s) => f(s),
            None => Err(ApiError::no_dataset()),
        }
    }

    fn with_session_mut<T>(&self, f: impl FnOnce(&mut Session) -> ApiResult<T>) -> ApiResult<T> {
        let mut guard = self.session.write().unwrap_or_else(|e| e.into_inner());
        match guard.as_mut() {
            Some(s) => f(s),
            None => Err(ApiError::no_dataset()),
        }
    }

    pub fn replace(&self, session: Session) {
        *self.session.write().unwrap_or_else(|e| e.into_inner()) = Some(session);
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(|| async { Json(json!({ "status": "ok" })) }))
        .route("/load", post(load))
        .route("/dataset/meta", get(dataset_meta))
        .route("/instance-space", get(instance_space))
        .route("/series/{id}", get(series))
        .route("/features/{id}", get(features))
        .route("/select", post(select))
        .route("/transform", post(transform))
        .route("/errors/summary", get(errors_summary))
        .with_state(state)
}

/// Port from `TSPROBE_PORT`, else the default.
pub fn port_from_env() -> Result<u16, String> {
    match std::env::var(PORT_ENV) {
        Ok(v) => v.parse().map_err(|_| format!("{PORT_ENV}='{v}' is not a port number")),
        Err(_) => Ok(DEFAULT_PORT),
    }
}

pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

/// Run CPU-bound session work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(axum::http::StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

async fn load(State(state): State<AppState>, Json(req): Json<LoadRequest>) -> ApiResult<Json<Value>> {
    let session = blocking(move || Session::load(&req)).await?;
    let meta = meta_of(&session);
    state.replace(session);
    Ok(Json(meta))
}

fn meta_of(s: &Session) -> Value {
    let ds = &s.dataset;
    json!({
        "session": SESSION_ID,
        "name": ds.name,
        "train": ds.train().len(),
        "test": ds.test().len(),
        "forecast_horizon": ds.forecast_horizon(),
        "context_length": ds.context_length(),
        "seasonal_period": ds.train().first().or(ds.test().first()).map(|x| x.seasonal_period()),
        "model": s.model.name(),
        "metric": s.metric,
        "points": s.space.points.len(),
        "selected": s.selected().map(|(split, id)| json!({ "id": id, "split": split })),
    })
}

async fn dataset_meta(State(state): State<AppState>) -> ApiResult<Json<Value>> {
    state.with_session(|s| Ok(Json(meta_of(s))))
}

#[derive(Debug, Deserialize)]
struct SpaceQuery {
    axis: Option<String>,
    bins: Option<usize>,
}

async fn instance_space(State(state): State<AppState>, Query(q): Query<SpaceQuery>) -> ApiResult<Json<Value>> {
    let axis: HistogramAxis = match &q.axis {
        Some(a) => a.parse()?,
        None => HistogramAxis::default(),
    };
    let bins = q.bins.unwrap_or(20);
    state.with_session(|s| {
        let sp = &s.space;
        Ok(Json(json!({
            "points": sp.points,
            "basis": sp.basis,
            "means": sp.means,
            "stds": sp.stds,
            "explained_variance": sp.explained_variance,
            "eigenvalues": sp.eigenvalues,
            "histogram": { "axis": axis, "bins": histogram(sp, axis, bins)? },
        })))
    })
}

#[derive(Debug, Deserialize)]
struct SplitQuery {
    split: Option<Split>,
}

async fn series(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<SplitQuery>,
) -> ApiResult<Json<Value>> {
    state.with_session(|s| Ok(Json(serde_json::to_value(s.series_payload(&id, q.split)?).map_err(internal)?)))
}

async fn features(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<SplitQuery>,
) -> ApiResult<Json<Value>> {
    state.with_session(|s| Ok(Json(serde_json::to_value(s.features_payload(&id, q.split)?).map_err(internal)?)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectRequest {
    id: String,
    #[serde(default)]
    split: Option<Split>,
}

async fn select(State(state): State<AppState>, Json(req): Json<SelectRequest>) -> ApiResult<Json<Value>> {
    state.with_session_mut(|s| Ok(Json(serde_json::to_value(s.select(&req.id, req.split)?).map_err(internal)?)))
}

/// Body is either a list of steps or `{"steps": [...]}`.
fn pipeline_of(body: Value) -> ApiResult<Value> {
    match body {
        Value::Array(_) => Ok(body),
        Value::Object(mut map) => match map.remove("steps") {
            Some(steps) if map.is_empty() => Ok(steps),
            _ => Err(ApiError::bad_request("expected a list of steps or {\"steps\": [...]}")),
        },
        _ => Err(ApiError::bad_request("expected a list of steps or {\"steps\": [...]}")),
    }
}

async fn transform(State(state): State<AppState>, Json(body): Json<Value>) -> ApiResult<Json<Value>> {
    let pipeline = pipeline_of(body)?;
    if let Some(hit) = state.with_session(|s| {
        if s.selected().is_none() {
            return Err(ApiError::conflict("no series selected"));
        }
        Ok(s.cached_transform(&pipeline))
    })? {
        return Ok(Json(serde_json::to_value(&*hit).map_err(internal)?));
    }

    let worker = state.clone();
    let p = pipeline.clone();
    let payload = blocking(move || worker.with_session(|s| s.compute_transform(&p))).await?;
    let payload = Arc::new(payload);
    let body = serde_json::to_value(&*payload).map_err(internal)?;
    state.with_session_mut(|s| {
        s.store_transform(pipeline, payload);
        Ok(())
    })?;
    Ok(Json(body))
}

#[derive(Debug, Deserialize)]
struct MetricQuery {
    metric: Option<String>,
}

async fn errors_summary(State(state): State<AppState>, Query(q): Query<MetricQuery>) -> ApiResult<Json<Value>> {
    let metric: Metric = match &q.metric {
        Some(m) => m.parse()?,
        None => state.with_session(|s| Ok(s.metric))?,
    };
    let worker = state.clone();
    blocking(move || worker.with_session(|s| s.error_summary(metric)))
        .await
        .map(Json)
}

fn internal(e: serde_json::Error) -> ApiError {
    ApiError::new(axum::http::StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

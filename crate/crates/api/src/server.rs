//! Read-only HTTP service over a session registry.
//!
//! | route | body |
//! |-------|------|
//! | `GET /api/sessions` | registry listing |
//! | `GET /api/sessions/{user}/{yyyy-mm-dd}/{movement\|emotion}` | session document |
//! | `GET /api/aggregates/direction?width=2` | `TimeBucket` array |
//! | `GET /api/aggregates/emotion?width=2&filter=HAPPY,ANGRY` | `TimeBucket` array |
//! | `GET /api/scatter` | per-user scatter series |
//!
//! Requests are answered from an immutable snapshot of the registry. A
//! background task swaps in a fresh snapshot when the directory changes.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::{Duration, SystemTime};

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use kinvis_core::aggregation::{
    direction_series, emotion_series, parse_emotion_filter, scatter_series, DEFAULT_BUCKET_WIDTH_S,
};
use kinvis_core::session_store::{serialize_sessions, DocumentKind, Registry, RegistryEntry, RegistryError, RegistryKey};
use kinvis_core::{SessionDate, SessionF64, UserLabel};
use serde_json::json;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;

/// Everything the handlers read, loaded once per registry change.
#[derive(Debug, Default)]
pub struct Snapshot {
    entries: Vec<RegistryEntry>,
    documents: HashMap<RegistryKey, String>,
    movements: Vec<SessionF64>,
    emotions: Vec<SessionF64>,
}

impl Snapshot {
    pub fn load(registry: &Registry) -> Result<Self, RegistryError> {
        let mut snapshot = Snapshot { entries: registry.list_sessions()?, ..Default::default() };
        for key in registry.keys()? {
            let session = registry.load_session::<f64>(&key)?;
            snapshot
                .documents
                .insert(key.clone(), serialize_sessions(std::slice::from_ref(&session), key.kind));
            match key.kind {
                DocumentKind::Movement => snapshot.movements.push(session),
                DocumentKind::Emotion => snapshot.emotions.push(session),
            }
        }
        Ok(snapshot)
    }
}

/// Cheap change detector: names, sizes and modification times of the registry files.
pub fn fingerprint(registry: &Registry) -> std::io::Result<BTreeMap<String, (u64, Option<SystemTime>)>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(registry.root())? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with('.') {
            continue;
        }
        let meta = entry.metadata()?;
        out.insert(name, (meta.len(), meta.modified().ok()));
    }
    Ok(out)
}

pub struct AppState {
    registry: Registry,
    snapshot: RwLock<Arc<Snapshot>>,
}

impl AppState {
    pub fn load(registry: Registry) -> Result<Arc<Self>, RegistryError> {
        let snapshot = Snapshot::load(&registry)?;
        Ok(Arc::new(Self { registry, snapshot: RwLock::new(Arc::new(snapshot)) }))
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock poisoned").clone()
    }

    pub fn reload(&self) -> Result<(), RegistryError> {
        let fresh = Arc::new(Snapshot::load(&self.registry)?);
        *self.snapshot.write().expect("snapshot lock poisoned") = fresh;
        Ok(())
    }

    /// Polls the registry and reloads on change. A failed reload keeps serving the old snapshot.
    pub async fn watch(self: Arc<Self>, interval: Duration) {
        let mut last = fingerprint(&self.registry).ok();
        let mut ticker = tokio::time::interval(interval);
        ticker.tick().await;
        loop {
            ticker.tick().await;
            let current = fingerprint(&self.registry).ok();
            if current != last {
                match self.reload() {
                    Ok(()) => log::info!("registry changed, snapshot reloaded"),
                    Err(e) => log::warn!("registry reload failed: {e}"),
                }
                last = current;
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ServeOptions {
    pub assets: Option<PathBuf>,
    /// `None` allows any origin.
    pub cors_origins: Option<Vec<String>>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl ToString) -> Self {
        Self { status: StatusCode::BAD_REQUEST, message: message.to_string() }
    }

    fn not_found(message: impl ToString) -> Self {
        Self { status: StatusCode::NOT_FOUND, message: message.to_string() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type Params = Query<HashMap<String, String>>;

fn check_params(params: &HashMap<String, String>, allowed: &[&str]) -> Result<(), ApiError> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(ApiError::bad_request(format!("unknown query parameter {k:?}"))),
        None => Ok(()),
    }
}

fn width_param(params: &HashMap<String, String>) -> Result<f64, ApiError> {
    match params.get("width") {
        None => Ok(DEFAULT_BUCKET_WIDTH_S),
        Some(raw) => match raw.parse::<f64>() {
            Ok(w) if w.is_finite() && w > 0.0 => Ok(w),
            _ => Err(ApiError::bad_request(format!("width must be a positive number, got {raw:?}"))),
        },
    }
}

async fn list_sessions(State(state): State<Arc<AppState>>) -> Json<Vec<RegistryEntry>> {
    Json(state.snapshot().entries.clone())
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    Path((user, date, kind)): Path<(String, String, String)>,
) -> Result<Response, ApiError> {
    let user = UserLabel::new(user).map_err(ApiError::bad_request)?;
    let date = SessionDate::parse_iso(&date).map_err(ApiError::bad_request)?;
    let kind = match kind.as_str() {
        "movement" => DocumentKind::Movement,
        "emotion" => DocumentKind::Emotion,
        other => return Err(ApiError::bad_request(format!("unknown kind {other:?}, expected movement or emotion"))),
    };
    let key = RegistryKey::new(user, date, kind);
    let snapshot = state.snapshot();
    let body = snapshot.documents.get(&key).ok_or_else(|| ApiError::not_found(format!("session {key} not found")))?;
    Ok(([(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))], body.clone()).into_response())
}

async fn direction_aggregate(State(state): State<Arc<AppState>>, Query(params): Params) -> Result<Response, ApiError> {
    check_params(&params, &["width"])?;
    let width = width_param(&params)?;
    let buckets = direction_series(&state.snapshot().movements, width).map_err(ApiError::bad_request)?;
    Ok(Json(buckets).into_response())
}

async fn emotion_aggregate(State(state): State<Arc<AppState>>, Query(params): Params) -> Result<Response, ApiError> {
    check_params(&params, &["width", "filter"])?;
    let width = width_param(&params)?;
    let filter = params.get("filter").map(|f| parse_emotion_filter(f)).transpose().map_err(ApiError::bad_request)?;
    let buckets =
        emotion_series(&state.snapshot().emotions, width, filter.as_deref()).map_err(ApiError::bad_request)?;
    Ok(Json(buckets).into_response())
}

async fn scatter(State(state): State<Arc<AppState>>) -> Response {
    Json(scatter_series(&state.snapshot().movements)).into_response()
}

async fn api_not_found() -> ApiError {
    ApiError::not_found("no such endpoint")
}

pub fn router(state: Arc<AppState>, options: &ServeOptions) -> Router {
    let api = Router::new()
        .route("/api/sessions", get(list_sessions))
        .route("/api/sessions/:user/:date/:kind", get(get_session))
        .route("/api/aggregates/direction", get(direction_aggregate))
        .route("/api/aggregates/emotion", get(emotion_aggregate))
        .route("/api/scatter", get(scatter))
        .route("/api/*rest", get(api_not_found))
        .with_state(state);

    let allow_origin = match &options.cors_origins {
        None => AllowOrigin::any(),
        Some(list) => AllowOrigin::list(list.iter().filter_map(|o| HeaderValue::from_str(o).ok())),
    };
    let cors = CorsLayer::new().allow_methods([axum::http::Method::GET]).allow_origin(allow_origin);

    let app = match &options.assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(api_not_found),
    };
    app.layer(cors)
}

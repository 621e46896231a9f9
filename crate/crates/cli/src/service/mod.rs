//! HTTP API and live game stream.
//!
//! | method | path | |
//! |---|---|---|
//! | GET, POST | `/patients` | list, create (`{"name", "notes"?}`) |
//! | GET | `/patients/:id` | |
//! | GET | `/patients/:id/trend?metric=` | least-squares trend of one metric |
//! | GET | `/patients/:id/emr` | EMR export |
//! | GET, POST | `/levels` | list, create (`{"name", "level"}`) |
//! | GET, PUT | `/levels/:id` | |
//! | POST | `/sessions` | open a live session (`{"patient_id", "level_id"? or "level"?, "estimator"?}`) |
//! | GET | `/sessions?patient=` | saved therapies |
//! | GET | `/sessions/:id` | saved therapy record |
//! | GET | `/sessions/:id/replay` | telemetry, one JSON tick per line |
//! | GET | `/sessions/:id/recording` | voice recording as WAV |
//! | GET | `/bench/report?format=json\|csv` | estimator benchmark, best first |
//! | GET (upgrade) | `/live/:session_id` | binary audio in, JSON telemetry out |
//!
//! Errors come back as `{"error": {"code", "message"}}`.

mod error;
mod live;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State, WebSocketUpgrade};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::OnceCell;
use vocalplay_core::bench::{run_benchmark, write_report, ReportFormat};
use vocalplay_core::store::{new_id, SessionStore, StoredLevel};
use vocalplay_core::{BenchReport, Estimator, EstimatorConfig, LevelConfig};

pub use error::ApiError;

use crate::config::ServeConfig;

/// A session opened with `POST /sessions` that has not been streamed yet.
#[derive(Debug, Clone, Serialize)]
pub struct PendingSession {
    pub session_id: String,
    pub patient_id: String,
    pub level: LevelConfig,
    pub estimator: Estimator,
    pub created_at: DateTime<Utc>,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    store: Arc<Mutex<SessionStore>>,
    pending: Mutex<HashMap<String, PendingSession>>,
    pitch: EstimatorConfig,
    default_estimator: Estimator,
    ring_capacity: usize,
    bench_seed: u64,
    bench: OnceCell<Vec<BenchReport>>,
}

impl AppState {
    pub fn new(store: SessionStore, config: &ServeConfig) -> Self {
        Self {
            inner: Arc::new(Inner {
                store: Arc::new(Mutex::new(store)),
                pending: Mutex::new(HashMap::new()),
                pitch: config.pitch.clone(),
                default_estimator: config.estimator,
                ring_capacity: config.ring_capacity,
                bench_seed: config.bench_seed,
                bench: OnceCell::new(),
            }),
        }
    }

    /// Runs `f` against the store on the blocking pool. All store access
    /// goes through here, one caller at a time.
    async fn with_store<T, F>(&self, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&mut SessionStore) -> Result<T, ApiError> + Send + 'static,
    {
        let store = self.inner.store.clone();
        tokio::task::spawn_blocking(move || {
            let mut guard = store.lock().map_err(|_| ApiError::internal("store lock poisoned"))?;
            f(&mut guard)
        })
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/patients", get(list_patients).post(create_patient))
        .route("/patients/:id", get(get_patient))
        .route("/patients/:id/trend", get(patient_trend))
        .route("/patients/:id/emr", get(patient_emr))
        .route("/levels", get(list_levels).post(create_level))
        .route("/levels/:id", get(get_level).put(update_level))
        .route("/sessions", get(list_sessions).post(start_session))
        .route("/sessions/:id", get(get_session))
        .route("/sessions/:id/replay", get(replay_session))
        .route("/sessions/:id/recording", get(session_recording))
        .route("/bench/report", get(bench_report))
        .route("/live/:id", get(live))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(state)
}

/// Binds and serves until the process is stopped.
pub async fn serve(config: ServeConfig) -> anyhow::Result<()> {
    let store = SessionStore::open(&config.store)?;
    let listener = TcpListener::bind(config.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, store = %config.store.display(), "listening");
    axum::serve(listener, router(AppState::new(store, &config)))
        .tcp_nodelay(true)
        .await?;
    Ok(())
}

/// Serves on an already bound listener in a background task; returns the
/// bound address. Used by tests and embedders.
pub async fn spawn(config: ServeConfig) -> anyhow::Result<SocketAddr> {
    let store = SessionStore::open(&config.store)?;
    let listener = TcpListener::bind(config.bind).await?;
    let addr = listener.local_addr()?;
    let app = router(AppState::new(store, &config));
    tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).tcp_nodelay(true).await {
            tracing::error!("server stopped: {e}");
        }
    });
    Ok(addr)
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("invalid_body", e.to_string()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewPatient {
    name: String,
    #[serde(default)]
    notes: String,
}

async fn list_patients(State(app): State<AppState>) -> Result<Response, ApiError> {
    let patients = app.with_store(|s| Ok(s.patients().to_vec())).await?;
    Ok(Json(patients).into_response())
}

async fn create_patient(State(app): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: NewPatient = parse_body(&body)?;
    let patient = app
        .with_store(move |s| Ok(s.create_patient(&req.name, &req.notes)?))
        .await?;
    Ok((StatusCode::CREATED, Json(patient)).into_response())
}

async fn get_patient(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let patient = app.with_store(move |s| Ok(s.patient(&id)?.clone())).await?;
    Ok(Json(patient).into_response())
}

#[derive(Deserialize)]
struct TrendQuery {
    metric: String,
}

async fn patient_trend(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<TrendQuery>,
) -> Result<Response, ApiError> {
    let series = app.with_store(move |s| Ok(s.trend(&id, &q.metric)?)).await?;
    Ok(Json(series).into_response())
}

async fn patient_emr(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let doc = app.with_store(move |s| Ok(s.export_emr(&id)?)).await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], doc.to_json()).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelBody {
    name: String,
    level: LevelConfig,
}

async fn list_levels(State(app): State<AppState>) -> Result<Response, ApiError> {
    let levels = app.with_store(|s| Ok(s.levels().to_vec())).await?;
    Ok(Json(levels).into_response())
}

async fn create_level(State(app): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: LevelBody = parse_body(&body)?;
    let stored = app.with_store(move |s| Ok(s.create_level(&req.name, req.level)?)).await?;
    Ok((StatusCode::CREATED, Json(stored)).into_response())
}

async fn get_level(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let stored: StoredLevel = app.with_store(move |s| Ok(s.level(&id)?.clone())).await?;
    Ok(Json(stored).into_response())
}

async fn update_level(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let req: LevelBody = parse_body(&body)?;
    let stored = app
        .with_store(move |s| Ok(s.update_level(&id, &req.name, req.level)?))
        .await?;
    Ok(Json(stored).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StartSession {
    patient_id: String,
    #[serde(default)]
    level_id: Option<String>,
    #[serde(default)]
    level: Option<LevelConfig>,
    #[serde(default)]
    estimator: Option<Estimator>,
}

async fn start_session(State(app): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: StartSession = parse_body(&body)?;
    let estimator = req.estimator.unwrap_or(app.inner.default_estimator);
    let (patient_id, level) = app
        .with_store(move |s| {
            s.patient(&req.patient_id)?;
            let level = match (req.level_id, req.level) {
                (Some(_), Some(_)) => {
                    return Err(ApiError::bad_request("validation", "give either level_id or level, not both"))
                }
                (Some(id), None) => s.level(&id)?.level.clone(),
                (None, Some(level)) => level,
                (None, None) => LevelConfig::default(),
            };
            level
                .validate()
                .map_err(|e| ApiError::bad_request("validation", e.to_string()))?;
            Ok((req.patient_id, level))
        })
        .await?;
    let pending = PendingSession {
        session_id: new_id(),
        patient_id,
        level,
        estimator,
        created_at: Utc::now(),
    };
    app.inner
        .pending
        .lock()
        .map_err(|_| ApiError::internal("session table poisoned"))?
        .insert(pending.session_id.clone(), pending.clone());
    Ok((StatusCode::CREATED, Json(pending)).into_response())
}

#[derive(Deserialize)]
struct SessionQuery {
    patient: Option<String>,
}

async fn list_sessions(State(app): State<AppState>, Query(q): Query<SessionQuery>) -> Result<Response, ApiError> {
    let sessions = app
        .with_store(move |s| Ok(s.sessions(q.patient.as_deref())?.into_iter().cloned().collect::<Vec<_>>()))
        .await?;
    Ok(Json(sessions).into_response())
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let session = app.with_store(move |s| Ok(s.session(&id)?.clone())).await?;
    Ok(Json(session).into_response())
}

async fn replay_session(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let replay = app.with_store(move |s| Ok(s.replay(&id)?)).await?;
    let mut body = Vec::new();
    for tick in &replay.telemetry {
        serde_json::to_writer(&mut body, tick).map_err(|e| ApiError::internal(e.to_string()))?;
        body.push(b'\n');
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

async fn session_recording(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let bytes = app
        .with_store(move |s| {
            let session = s.session(&id)?;
            let rel = session
                .recording_path
                .clone()
                .ok_or_else(|| ApiError::not_found(format!("session {id} has no recording")))?;
            std::fs::read(s.root().join(rel)).map_err(|e| ApiError::internal(e.to_string()))
        })
        .await?;
    Ok(([(header::CONTENT_TYPE, "audio/wav")], bytes).into_response())
}

#[derive(Deserialize)]
struct BenchQuery {
    #[serde(default)]
    format: Option<String>,
}

async fn bench_report(State(app): State<AppState>, Query(q): Query<BenchQuery>) -> Result<Response, ApiError> {
    let format: ReportFormat = q
        .format
        .as_deref()
        .unwrap_or("json")
        .parse()
        .map_err(|e: vocalplay_core::bench::BenchError| ApiError::bad_request("validation", e.to_string()))?;
    let seed = app.inner.bench_seed;
    let cfg = app.inner.pitch.clone();
    let reports = app
        .inner
        .bench
        .get_or_try_init(|| async move {
            tokio::task::spawn_blocking(move || run_benchmark(seed, &cfg))
                .await
                .map_err(|e| ApiError::internal(e.to_string()))?
                .map(|r| r.into_iter().map(BenchReport::without_timing).collect::<Vec<_>>())
                .map_err(|e| ApiError::internal(e.to_string()))
        })
        .await?;
    let mut body = Vec::new();
    write_report(reports, format, &mut body).map_err(|e| ApiError::internal(e.to_string()))?;
    let content_type = match format {
        ReportFormat::Csv => "text/csv",
        ReportFormat::Json => "application/json",
    };
    Ok(([(header::CONTENT_TYPE, content_type)], body).into_response())
}

async fn live(State(app): State<AppState>, Path(id): Path<String>, ws: WebSocketUpgrade) -> Result<Response, ApiError> {
    let pending = app
        .inner
        .pending
        .lock()
        .map_err(|_| ApiError::internal("session table poisoned"))?
        .remove(&id)
        .ok_or_else(|| ApiError::not_found(format!("no pending session {id}")))?;
    Ok(ws.on_upgrade(move |socket| live::run(socket, app, pending)))
}

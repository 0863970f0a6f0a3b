//! HTTP/JSON front end for the streaming estimator.
//!
//! Sessions hold a reservoir and an aggregator in memory and accept edge
//! batches incrementally. Experiments and synthetic graph generation run on
//! the blocking pool.

mod error;
mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use simproj_api::{
    CreateSession, EdgeBatch, EdgeEstimate, ExperimentConfig, Health, IngestReport, InspectRequest, QueryParams,
    QueryResponse, ResultRecord, SessionCreated, SessionId, SessionStats, SynthRequest, SynthResponse,
};
use simproj_core::io::{self, AffiliationParams, DatasetStats, EdgeStreamFile};
use simproj_core::EdgeKey;
use tokio::net::TcpListener;
use tokio::sync::Semaphore;
use uuid::Uuid;

pub use error::ApiError;
pub use session::Session;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub max_sessions: usize,
    /// Experiments running at once; each may hold a full exact projection.
    pub max_experiments: usize,
    pub body_limit: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { max_sessions: 64, max_experiments: 1, body_limit: 64 << 20 }
    }
}

type SessionHandle = Arc<Mutex<Session>>;

pub struct AppState {
    config: ServerConfig,
    sessions: RwLock<HashMap<SessionId, SessionHandle>>,
    experiments: Semaphore,
}

impl AppState {
    pub fn new(config: ServerConfig) -> Arc<Self> {
        let experiments = Semaphore::new(config.max_experiments.max(1));
        Arc::new(AppState { config, sessions: RwLock::new(HashMap::new()), experiments })
    }

    fn session(&self, id: SessionId) -> Result<SessionHandle, ApiError> {
        let sessions = self.sessions.read().expect("session map poisoned");
        sessions.get(&id).cloned().ok_or(ApiError::SessionNotFound(id))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.config.body_limit;
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_stats).delete(delete_session))
        .route("/sessions/{id}/edges", post(ingest))
        .route("/sessions/{id}/query", get(query))
        .route("/sessions/{id}/stats", get(session_stats))
        .route("/sessions/{id}/edges/{u}/{v}/estimate", get(estimate))
        .route("/experiments", post(run_experiment))
        .route("/synth", post(synth))
        .route("/datasets/inspect", post(inspect))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(listener: TcpListener, config: ServerConfig) -> std::io::Result<()> {
    let addr = listener.local_addr()?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(AppState::new(config)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Binds an ephemeral local port and serves in the background. Returns the
/// bound address.
pub async fn spawn_local(config: ServerConfig) -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind(("127.0.0.1", 0)).await?;
    let addr = listener.local_addr()?;
    let app = router(AppState::new(config));
    tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            tracing::error!(error = %e, "embedded server stopped");
        }
    });
    Ok(addr)
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    let sessions = state.sessions.read().expect("session map poisoned").len();
    Json(Health { status: "ok".into(), version: env!("CARGO_PKG_VERSION").into(), sessions })
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let id = Uuid::new_v4();
    let session = Session::new(id, req.m, req.mode, req.n, req.seed)?;
    let mut sessions = state.sessions.write().expect("session map poisoned");
    if sessions.len() >= state.config.max_sessions {
        return Err(ApiError::TooManySessions(state.config.max_sessions));
    }
    sessions.insert(id, Arc::new(Mutex::new(session)));
    tracing::debug!(%id, m = req.m, "session created");
    Ok((StatusCode::CREATED, Json(SessionCreated { id })))
}

async fn delete_session(State(state): State<Arc<AppState>>, Path(id): Path<SessionId>) -> Result<StatusCode, ApiError> {
    let removed = state.sessions.write().expect("session map poisoned").remove(&id);
    match removed {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::SessionNotFound(id)),
    }
}

async fn ingest(
    State(state): State<Arc<AppState>>,
    Path(id): Path<SessionId>,
    Json(batch): Json<EdgeBatch>,
) -> Result<Json<IngestReport>, ApiError> {
    let handle = state.session(id)?;
    let report = tokio::task::spawn_blocking(move || {
        let mut session = handle.lock().expect("session poisoned");
        session.ingest(&batch.edges)
    })
    .await??;
    Ok(Json(report))
}

async fn query(
    State(state): State<Arc<AppState>>,
    Path(id): Path<SessionId>,
    Query(params): Query<QueryParams>,
) -> Result<Json<QueryResponse>, ApiError> {
    let handle = state.session(id)?;
    let resp = tokio::task::spawn_blocking(move || handle.lock().expect("session poisoned").query(&params)).await?;
    Ok(Json(resp))
}

async fn session_stats(
    State(state): State<Arc<AppState>>,
    Path(id): Path<SessionId>,
) -> Result<Json<SessionStats>, ApiError> {
    let handle = state.session(id)?;
    let stats = handle.lock().expect("session poisoned").stats();
    Ok(Json(stats))
}

async fn estimate(
    State(state): State<Arc<AppState>>,
    Path((id, u, v)): Path<(SessionId, u64, u64)>,
) -> Result<Json<EdgeEstimate>, ApiError> {
    let handle = state.session(id)?;
    let est = handle.lock().expect("session poisoned").estimate(EdgeKey::new(u, v));
    Ok(Json(est))
}

async fn run_experiment(
    State(state): State<Arc<AppState>>,
    Json(cfg): Json<ExperimentConfig>,
) -> Result<Json<Vec<ResultRecord>>, ApiError> {
    cfg.validate()?;
    let _permit = state.experiments.acquire().await.expect("semaphore never closed");
    tracing::info!(dataset = %cfg.dataset.display(), mode = cfg.mode.name(), "experiment started");
    let records = tokio::task::spawn_blocking(move || simproj_core::experiment::run_experiment(&cfg)).await??;
    Ok(Json(records))
}

async fn synth(Json(req): Json<SynthRequest>) -> Result<Json<SynthResponse>, ApiError> {
    let resp = tokio::task::spawn_blocking(move || -> Result<SynthResponse, ApiError> {
        let (n_u, n_v, edges) = match req {
            SynthRequest::Bipartite(p) => (p.n_u, p.n_v, io::synth_bipartite(p)?),
            SynthRequest::Affiliation(p) => (p.n_u, p.n_v, io::synth_affiliation(p)?),
            SynthRequest::GithubLike { seed } => {
                let p = AffiliationParams::github_like(seed);
                (p.n_u, p.n_v, io::synth_affiliation(p)?)
            }
        };
        let stats = DatasetStats::from_edges(&edges, 0);
        Ok(SynthResponse { n_u, n_v, stats, edges })
    })
    .await??;
    Ok(Json(resp))
}

async fn inspect(Json(req): Json<InspectRequest>) -> Result<Json<DatasetStats>, ApiError> {
    let stats =
        tokio::task::spawn_blocking(move || io::load_stream(&EdgeStreamFile::new(req.path)).map(|s| s.stats)).await??;
    Ok(Json(stats))
}

//! Async client for the simproj HTTP service.
//!
//! ```no_run
//! # async fn demo() -> Result<(), simproj_client::ClientError> {
//! use simproj_client::{Client, CreateSession};
//! use simproj_core::{EdgeKey, SamplerMode};
//!
//! let client = Client::new("http://127.0.0.1:7878")?;
//! let id = client
//!     .create_session(&CreateSession { m: 1000, mode: SamplerMode::Adaptive, n: Some(5000), seed: 1 })
//!     .await?;
//! client.ingest(id, &[EdgeKey::new(0, 0), EdgeKey::new(1, 0)]).await?;
//! let top = client.query(id, &Default::default()).await?;
//! # Ok(()) }
//! ```

use reqwest::{Method, RequestBuilder, StatusCode};
use serde::de::DeserializeOwned;
use simproj_core::io::DatasetStats;
use simproj_core::EdgeKey;

pub use simproj_api::*;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("invalid server url {0:?}")]
    InvalidUrl(String),

    #[error(transparent)]
    Transport(#[from] reqwest::Error),

    #[error("server returned {status}: {}", .body.error)]
    Api { status: StatusCode, body: ErrorBody },

    #[error("undecodable response: {0}")]
    Decode(#[from] serde_json::Error),
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            ClientError::Transport(e) => e.status(),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    http: reqwest::Client,
    base: String,
}

impl Client {
    pub fn new(base: impl Into<String>) -> Result<Self> {
        Self::with_http(reqwest::Client::new(), base)
    }

    pub fn with_http(http: reqwest::Client, base: impl Into<String>) -> Result<Self> {
        let base = base.into().trim_end_matches('/').to_string();
        if !(base.starts_with("http://") || base.starts_with("https://")) {
            return Err(ClientError::InvalidUrl(base));
        }
        Ok(Client { http, base })
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        self.http.request(method, format!("{}{}", self.base, path))
    }

    async fn send<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T> {
        let resp = req.send().await?;
        let status = resp.status();
        let bytes = resp.bytes().await?;
        if status.is_success() {
            Ok(serde_json::from_slice(&bytes)?)
        } else {
            let body = serde_json::from_slice(&bytes).unwrap_or_else(|_| ErrorBody {
                error: String::from_utf8_lossy(&bytes).into_owned(),
                accepted: None,
            });
            Err(ClientError::Api { status, body })
        }
    }

    pub async fn health(&self) -> Result<Health> {
        self.send(self.request(Method::GET, "/health")).await
    }

    pub async fn create_session(&self, req: &CreateSession) -> Result<SessionId> {
        let created: SessionCreated = self.send(self.request(Method::POST, "/sessions").json(req)).await?;
        Ok(created.id)
    }

    pub async fn ingest(&self, id: SessionId, edges: &[EdgeKey]) -> Result<IngestReport> {
        let batch = EdgeBatch { edges: edges.to_vec() };
        self.send(self.request(Method::POST, &format!("/sessions/{id}/edges")).json(&batch)).await
    }

    pub async fn query(&self, id: SessionId, params: &QueryParams) -> Result<QueryResponse> {
        self.send(self.request(Method::GET, &format!("/sessions/{id}/query")).query(params)).await
    }

    pub async fn stats(&self, id: SessionId) -> Result<SessionStats> {
        self.send(self.request(Method::GET, &format!("/sessions/{id}/stats"))).await
    }

    pub async fn estimate(&self, id: SessionId, edge: EdgeKey) -> Result<EdgeEstimate> {
        let path = format!("/sessions/{id}/edges/{}/{}/estimate", edge.u, edge.v);
        self.send(self.request(Method::GET, &path)).await
    }

    pub async fn delete_session(&self, id: SessionId) -> Result<()> {
        let resp = self.request(Method::DELETE, &format!("/sessions/{id}")).send().await?;
        let status = resp.status();
        if status.is_success() {
            return Ok(());
        }
        let bytes = resp.bytes().await?;
        let body = serde_json::from_slice(&bytes)
            .unwrap_or_else(|_| ErrorBody { error: String::from_utf8_lossy(&bytes).into_owned(), accepted: None });
        Err(ClientError::Api { status, body })
    }

    pub async fn run_experiment(&self, cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
        self.send(self.request(Method::POST, "/experiments").json(cfg)).await
    }

    pub async fn synth(&self, req: &SynthRequest) -> Result<SynthResponse> {
        self.send(self.request(Method::POST, "/synth").json(req)).await
    }

    /// Stats of an edge file as read by the server.
    pub async fn inspect(&self, path: &str) -> Result<DatasetStats> {
        let req = InspectRequest { path: path.to_string() };
        self.send(self.request(Method::POST, "/datasets/inspect").json(&req)).await
    }
}

//! Request and response bodies of the simproj HTTP service.

use serde::{Deserialize, Serialize};
use simproj_core::aggregator::Capacity;
use simproj_core::io::{AffiliationParams, DatasetStats, SynthParams};
use simproj_core::{EdgeKey, SamplerMode, Side, SimilarityEntry};
use uuid::Uuid;

pub use simproj_core::experiment::{ExperimentConfig, ResultRecord};

pub type SessionId = Uuid;

/// Opens a streaming session: an edge reservoir of `m` edges feeding an
/// aggregator of `n` keys, or an exact aggregator when `n` is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    pub m: usize,
    #[serde(default = "default_mode")]
    pub mode: SamplerMode,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn default_mode() -> SamplerMode {
    SamplerMode::Adaptive
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: SessionId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeBatch {
    pub edges: Vec<EdgeKey>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub accepted: usize,
    pub updates_emitted: u64,
    pub edges_seen: u64,
    pub sample_size: usize,
    pub z_star: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryParams {
    /// Drop estimates built from fewer than this many updates.
    #[serde(default)]
    pub filter: Option<u64>,
    #[serde(default)]
    pub side: Option<Side>,
    /// Keep only the largest `limit` estimates.
    #[serde(default)]
    pub limit: Option<usize>,
}

/// Estimates ordered from largest to smallest, ties broken by key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub edges_seen: u64,
    pub total: usize,
    pub entries: Vec<SimilarityEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub id: SessionId,
    pub mode: SamplerMode,
    pub capacity: usize,
    pub aggregator: Capacity,
    pub seed: u64,
    pub edges_seen: u64,
    pub sample_size: usize,
    pub sampled_nodes: usize,
    pub z_star: f64,
    pub aggregate_size: usize,
    pub updates_emitted: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEstimate {
    pub edge: EdgeKey,
    pub sampled: bool,
    pub weight: Option<u64>,
    pub p: Option<f64>,
    /// `1/p` when sampled, else 0.
    pub estimate: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum SynthRequest {
    Bipartite(SynthParams),
    Affiliation(AffiliationParams),
    /// Affiliation graph sized like a large user-project membership network.
    GithubLike { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthResponse {
    pub n_u: u64,
    pub n_v: u64,
    pub stats: DatasetStats,
    pub edges: Vec<EdgeKey>,
}

/// Asks the service to read an edge file visible to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectRequest {
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
    pub sessions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    /// Edges applied from a batch before it failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted: Option<usize>,
}

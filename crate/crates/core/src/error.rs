use std::path::PathBuf;

use crate::types::EdgeKey;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The stream contract requires every edge to arrive at most once.
    #[error("duplicate edge {0}")]
    DuplicateEdge(EdgeKey),

    #[error("edge {0} is not in the reservoir")]
    EdgeNotSampled(EdgeKey),

    #[error("reservoir is full (capacity {0})")]
    ReservoirFull(usize),

    #[error("invalid capacity: {0}")]
    InvalidCapacity(String),

    #[error("invalid update value {0}: must be finite and positive")]
    InvalidUpdate(f64),

    #[error("pair endpoints must be distinct nodes on the same side")]
    InvalidPair,

    #[error("oracle budget of {budget} pairs exceeded")]
    OracleOverflow { budget: usize },

    #[error("graph too large for the dense check: {0} nodes on one side (limit {1})")]
    SizeGuard(usize, usize),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("metric undefined: {0}")]
    Undefined(&'static str),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("cannot open {}: {source}", .path.display())]
    Open {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

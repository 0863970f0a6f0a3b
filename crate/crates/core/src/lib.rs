//! Streaming estimation of common-neighbor similarity in bipartite edge streams.
//!
//! The pipeline has two sampling stages. An [`EdgeReservoir`] keeps a fixed-size
//! weighted sample of the bipartite edges and, for every arriving edge, emits one
//! [`SimilarityUpdate`] per wedge it closes with the sample. An [`Aggregator`]
//! accumulates those updates into per-pair estimates, either exactly or in fixed
//! storage with [`PriorityAggregator`].
//!
//! ```
//! use simproj_core::{EdgeKey, EdgeReservoir, ExactAggregator, Aggregator, SamplerMode, Side};
//!
//! let mut sampler = EdgeReservoir::new(100, SamplerMode::Adaptive, 7).unwrap();
//! let mut agg = ExactAggregator::new();
//! for (u, v) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
//!     sampler.process_edge_into(EdgeKey::new(u, v), &mut agg).unwrap();
//! }
//! let table = agg.query();
//! assert_eq!(table.side(Side::U).len(), 1);
//! assert_eq!(table.side(Side::U)[0].estimate, 2.0);
//! ```

pub mod aggregator;
pub mod baselines;
pub mod error;
pub mod experiment;
pub mod hash;
pub mod heap;
pub mod io;
pub mod metrics;
pub mod oracle;
pub mod sampler;
pub mod table;
pub mod types;

pub use aggregator::{Aggregator, AggregatorKind, ExactAggregator, PriorityAggregator};
pub use error::{Error, Result};
pub use sampler::{EdgeReservoir, SampledEdge, SamplerMode, UpdateSink};
pub use table::{SimilarityEntry, SimilarityTable};
pub use types::{EdgeKey, NodeId, PairKey, Side, SimilarityUpdate};

use simproj_api::{EdgeEstimate, IngestReport, QueryParams, QueryResponse, SessionId, SessionStats};
use simproj_core::aggregator::Capacity;
use simproj_core::experiment::aggregator_seed;
use simproj_core::{Aggregator, AggregatorKind, EdgeKey, EdgeReservoir, SamplerMode, Side};

use crate::error::ApiError;

/// A live reservoir and aggregator fed by successive edge batches.
pub struct Session {
    id: SessionId,
    reservoir: EdgeReservoir,
    aggregator: AggregatorKind,
    updates_emitted: u64,
}

impl Session {
    pub fn new(id: SessionId, m: usize, mode: SamplerMode, n: Option<usize>, seed: u64) -> Result<Self, ApiError> {
        let reservoir = EdgeReservoir::new(m, mode, seed)?;
        let capacity = n.map_or(Capacity::Unbounded, Capacity::Bounded);
        let aggregator = AggregatorKind::initialize(capacity, aggregator_seed(seed))?;
        Ok(Session { id, reservoir, aggregator, updates_emitted: 0 })
    }

    /// Applies edges in order. On failure the edges before the bad one stay
    /// applied and the error reports how many that was.
    pub fn ingest(&mut self, edges: &[EdgeKey]) -> Result<IngestReport, ApiError> {
        let mut emitted = 0u64;
        for (i, &e) in edges.iter().enumerate() {
            match self.reservoir.process_edge_into(e, &mut self.aggregator) {
                Ok(k) => emitted += k as u64,
                Err(source) => {
                    self.updates_emitted += emitted;
                    return Err(ApiError::Core { source, accepted: Some(i) });
                }
            }
        }
        self.updates_emitted += emitted;
        Ok(IngestReport {
            accepted: edges.len(),
            updates_emitted: emitted,
            edges_seen: self.reservoir.arrivals(),
            sample_size: self.reservoir.len(),
            z_star: self.reservoir.z_star(),
        })
    }

    pub fn query(&self, params: &QueryParams) -> QueryResponse {
        let table = self.aggregator.query();
        let mut entries: Vec<_> = match params.side {
            Some(side) => table.side(side).to_vec(),
            None => table.side(Side::U).iter().chain(table.side(Side::V)).copied().collect(),
        };
        if let Some(threshold) = params.filter {
            entries.retain(|e| e.update_count >= threshold);
        }
        let total = entries.len();
        entries.sort_by(|a, b| b.estimate.total_cmp(&a.estimate).then(a.key.cmp(&b.key)));
        if let Some(limit) = params.limit {
            entries.truncate(limit);
        }
        QueryResponse { edges_seen: self.reservoir.arrivals(), total, entries }
    }

    pub fn stats(&self) -> SessionStats {
        SessionStats {
            id: self.id,
            mode: self.reservoir.mode(),
            capacity: self.reservoir.capacity(),
            aggregator: self.aggregator.capacity(),
            seed: self.reservoir.seed(),
            edges_seen: self.reservoir.arrivals(),
            sample_size: self.reservoir.len(),
            sampled_nodes: self.reservoir.sampled_nodes(),
            z_star: self.reservoir.z_star(),
            aggregate_size: self.aggregator.len(),
            updates_emitted: self.updates_emitted,
        }
    }

    pub fn estimate(&mut self, edge: EdgeKey) -> EdgeEstimate {
        match self.reservoir.refreshed(edge) {
            Some(s) => EdgeEstimate {
                edge,
                sampled: true,
                weight: Some(s.weight),
                p: Some(s.p),
                estimate: 1.0 / s.p,
                variance: (1.0 / s.p) * (1.0 / s.p - 1.0),
            },
            None => EdgeEstimate { edge, sampled: false, weight: None, p: None, estimate: 0.0, variance: 0.0 },
        }
    }
}

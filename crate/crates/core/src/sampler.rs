//! Fixed-size weighted edge reservoir over a bipartite edge stream.
//!
//! Each sampled edge carries a weight `w`, a permanent random number `beta` and
//! a running conditional inclusion probability `p`. The reservoir keeps the `m`
//! edges of highest priority `w / beta`. Under [`SamplerMode::Adaptive`] an
//! edge's weight is the sum of its endpoint degrees in the sampled graph and
//! grows as adjacent edges are admitted; it never shrinks. The running
//! threshold `z_star` is the largest priority ever discarded, and an edge's `p`
//! is the minimum of `w / z_star` over its residence, refreshed lazily whenever
//! the weight is about to change or `p` is read.
//!
//! Every arriving edge `(u, v)` closes one wedge with each sampled edge at `u`
//! or `v`. Before the reservoir changes, each such wedge is reported as a
//! [`SimilarityUpdate`] carrying `1 / p` of the sampled edge, which is an
//! unbiased estimate of that edge's presence in the stream.

use std::cmp::Ordering;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::beta_of;
use crate::heap::{IndexedMinHeap, Keyed};
use crate::types::{EdgeKey, NodeId, PairKey, Side, SimilarityUpdate};

/// How edge weights are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SamplerMode {
    /// Weight tracks the sampled endpoint degrees and grows with new adjacencies.
    Adaptive,
    /// Weight is the sampled endpoint degree sum at arrival, then frozen.
    Fixed,
    /// Every edge has weight 1.
    Unit,
}

impl std::str::FromStr for SamplerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adaptive" | "simadapt" => Ok(SamplerMode::Adaptive),
            "fixed" | "simfixed" => Ok(SamplerMode::Fixed),
            "unit" | "unif" | "simunif" => Ok(SamplerMode::Unit),
            other => Err(Error::Config(format!("unknown sampler mode {other:?}"))),
        }
    }
}

/// Receives similarity updates synchronously while an edge is processed.
pub trait UpdateSink {
    fn emit(&mut self, key: PairKey, value: f64);
}

impl UpdateSink for Vec<SimilarityUpdate> {
    fn emit(&mut self, key: PairKey, value: f64) {
        self.push(SimilarityUpdate { key, value });
    }
}

impl<S: UpdateSink + ?Sized> UpdateSink for &mut S {
    fn emit(&mut self, key: PairKey, value: f64) {
        (**self).emit(key, value)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampledEdge {
    pub key: EdgeKey,
    pub weight: u64,
    pub beta: f64,
    pub p: f64,
}

impl SampledEdge {
    #[inline]
    pub fn priority(&self) -> f64 {
        self.weight as f64 / self.beta
    }

    /// Lowers `p` to `w / z` when the threshold makes inclusion less certain.
    #[inline]
    pub fn update_probability(&mut self, z: f64) {
        if z > 0.0 {
            self.p = self.p.min(self.weight as f64 / z);
        }
    }
}

// Ordered by (priority, beta, key) so ties resolve deterministically.
impl Ord for SampledEdge {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority()
            .total_cmp(&other.priority())
            .then_with(|| self.beta.total_cmp(&other.beta))
            .then_with(|| self.key.cmp(&other.key))
    }
}

impl PartialOrd for SampledEdge {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for SampledEdge {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for SampledEdge {}

impl Keyed for SampledEdge {
    type Key = EdgeKey;
    fn key(&self) -> EdgeKey {
        self.key
    }
}

/// What happened to an arriving edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Admission {
    Inserted,
    Discarded,
    Replaced(EdgeKey),
}

#[derive(Debug, Clone)]
pub struct EdgeReservoir {
    capacity: usize,
    mode: SamplerMode,
    seed: u64,
    heap: IndexedMinHeap<SampledEdge>,
    // u -> sampled v neighbors, v -> sampled u neighbors, in insertion order.
    by_u: FxHashMap<u64, Vec<u64>>,
    by_v: FxHashMap<u64, Vec<u64>>,
    z_star: f64,
    t: u64,
    seen: Option<FxHashSet<EdgeKey>>,
    last_admission: Option<Admission>,
}

impl EdgeReservoir {
    /// Empty reservoir holding at most `capacity` edges. Tracks every edge seen
    /// so repeats are rejected; see [`EdgeReservoir::without_duplicate_tracking`].
    pub fn new(capacity: usize, mode: SamplerMode, seed: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidCapacity("edge reservoir capacity must be >= 1".into()));
        }
        Ok(EdgeReservoir {
            capacity,
            mode,
            seed,
            heap: IndexedMinHeap::with_capacity(capacity.min(1 << 20) + 1),
            by_u: FxHashMap::default(),
            by_v: FxHashMap::default(),
            z_star: 0.0,
            t: 0,
            seen: Some(FxHashSet::default()),
            last_admission: None,
        })
    }

    /// Drops the full seen-edge set, keeping memory proportional to the sample.
    /// Only repeats of currently sampled edges are then detected; callers must
    /// deduplicate upstream.
    pub fn without_duplicate_tracking(mut self) -> Self {
        self.seen = None;
        self
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn mode(&self) -> SamplerMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn z_star(&self) -> f64 {
        self.z_star
    }

    /// Number of arrivals processed.
    pub fn arrivals(&self) -> u64 {
        self.t
    }

    pub fn last_admission(&self) -> Option<Admission> {
        self.last_admission
    }

    pub fn contains(&self, e: EdgeKey) -> bool {
        self.heap.contains(&e)
    }

    /// Stored state of a sampled edge. `p` may be stale; see [`Self::refreshed`].
    pub fn get(&self, e: EdgeKey) -> Option<&SampledEdge> {
        self.heap.get(&e)
    }

    /// Lowest-priority sampled edge.
    pub fn min_edge(&self) -> Option<&SampledEdge> {
        self.heap.peek()
    }

    pub fn edges(&self) -> impl Iterator<Item = &SampledEdge> {
        self.heap.iter()
    }

    /// Sampled neighbors of `node`, in the order their edges were admitted.
    pub fn neighbors(&self, node: NodeId) -> &[u64] {
        let map = match node.side {
            Side::U => &self.by_u,
            Side::V => &self.by_v,
        };
        map.get(&node.id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.neighbors(node).len()
    }

    /// Number of distinct nodes incident to sampled edges.
    pub fn sampled_nodes(&self) -> usize {
        self.by_u.len() + self.by_v.len()
    }

    /// Sampled edge with its `p` refreshed against the current threshold.
    pub fn refreshed(&mut self, e: EdgeKey) -> Option<SampledEdge> {
        let z = self.z_star;
        self.heap.modify(&e, |edge| {
            edge.update_probability(z);
            *edge
        })
    }

    /// Processes one arrival and returns the similarity updates it generates.
    pub fn process_edge(&mut self, e: EdgeKey) -> Result<Vec<SimilarityUpdate>> {
        let mut out = Vec::new();
        self.process_edge_into(e, &mut out)?;
        Ok(out)
    }

    /// Processes one arrival, feeding its similarity updates to `sink` before
    /// the reservoir is modified. Returns the number of updates emitted.
    pub fn process_edge_into<S: UpdateSink + ?Sized>(&mut self, e: EdgeKey, sink: &mut S) -> Result<usize> {
        if self.heap.contains(&e) {
            return Err(Error::DuplicateEdge(e));
        }
        if let Some(seen) = &mut self.seen {
            if !seen.insert(e) {
                return Err(Error::DuplicateEdge(e));
            }
        }
        let emitted = self.emit_updates(e, sink);
        self.t += 1;

        let weight = self.arrival_weight(e);
        let candidate = SampledEdge {
            key: e,
            weight,
            beta: beta_of(e, self.seed),
            p: 1.0,
        };
        let admission = if self.heap.len() < self.capacity {
            self.insert_unchecked(candidate);
            Admission::Inserted
        } else {
            // Admit first so adjacent weights grow whether or not the arrival
            // survives, then drop the lowest of the m + 1 priorities.
            self.insert_unchecked(candidate);
            let min = *self.heap.peek().expect("non-empty");
            self.z_star = self.z_star.max(min.priority());
            self.delete_edge(min.key)?;
            if min.key == e {
                Admission::Discarded
            } else {
                Admission::Replaced(min.key)
            }
        };
        self.last_admission = Some(admission);
        Ok(emitted)
    }

    fn emit_updates<S: UpdateSink + ?Sized>(&mut self, e: EdgeKey, sink: &mut S) -> usize {
        let z = self.z_star;
        let mut n = 0;
        if let Some(us) = self.by_v.get(&e.v) {
            for &u2 in us {
                let p = self
                    .heap
                    .modify(&EdgeKey::new(u2, e.v), |edge| {
                        edge.update_probability(z);
                        edge.p
                    })
                    .expect("adjacency and heap agree");
                sink.emit(PairKey::canonical(Side::U, u2, e.u), 1.0 / p);
                n += 1;
            }
        }
        if let Some(vs) = self.by_u.get(&e.u) {
            for &v2 in vs {
                let p = self
                    .heap
                    .modify(&EdgeKey::new(e.u, v2), |edge| {
                        edge.update_probability(z);
                        edge.p
                    })
                    .expect("adjacency and heap agree");
                sink.emit(PairKey::canonical(Side::V, v2, e.v), 1.0 / p);
                n += 1;
            }
        }
        n
    }

    /// Weight the edge would receive if admitted now; the edge counts itself
    /// in both endpoint degrees.
    fn arrival_weight(&self, e: EdgeKey) -> u64 {
        match self.mode {
            SamplerMode::Unit => 1,
            SamplerMode::Adaptive | SamplerMode::Fixed => {
                (self.degree(NodeId::u(e.u)) + self.degree(NodeId::v(e.v)) + 2) as u64
            }
        }
    }

    /// Admits `e` into a reservoir that has room for it.
    pub fn insert_edge(&mut self, e: EdgeKey) -> Result<()> {
        if self.heap.len() >= self.capacity {
            return Err(Error::ReservoirFull(self.capacity));
        }
        if self.heap.contains(&e) {
            return Err(Error::DuplicateEdge(e));
        }
        let candidate = SampledEdge {
            key: e,
            weight: self.arrival_weight(e),
            beta: beta_of(e, self.seed),
            p: 1.0,
        };
        self.insert_unchecked(candidate);
        Ok(())
    }

    fn insert_unchecked(&mut self, mut edge: SampledEdge) {
        let e = edge.key;
        if self.mode == SamplerMode::Adaptive {
            let z = self.z_star;
            let bump = |edge: &mut SampledEdge| {
                edge.update_probability(z);
                edge.weight += 1;
            };
            if let Some(us) = self.by_v.get(&e.v) {
                for &u2 in us {
                    self.heap.modify(&EdgeKey::new(u2, e.v), bump);
                }
            }
            if let Some(vs) = self.by_u.get(&e.u) {
                for &v2 in vs {
                    self.heap.modify(&EdgeKey::new(e.u, v2), bump);
                }
            }
        }
        let vs = self.by_u.entry(e.u).or_default();
        vs.push(e.v);
        let du = vs.len();
        let us = self.by_v.entry(e.v).or_default();
        us.push(e.u);
        let dv = us.len();
        edge.weight = match self.mode {
            SamplerMode::Unit => 1,
            _ => (du + dv) as u64,
        };
        edge.p = 1.0;
        self.heap.push(edge);
    }

    /// Removes a sampled edge and its probability record. Weights of adjacent
    /// edges are left unchanged.
    pub fn delete_edge(&mut self, e: EdgeKey) -> Result<SampledEdge> {
        let edge = self.heap.remove(&e).ok_or(Error::EdgeNotSampled(e))?;
        detach(&mut self.by_u, e.u, e.v);
        detach(&mut self.by_v, e.v, e.u);
        Ok(edge)
    }

    /// Inverse-probability estimate of the edge's presence: `1/p` if sampled,
    /// else 0.
    pub fn edge_estimator(&mut self, e: EdgeKey) -> f64 {
        self.refreshed(e).map_or(0.0, |edge| 1.0 / edge.p)
    }

    /// Unbiased estimate of the variance of [`Self::edge_estimator`].
    pub fn variance_estimate(&mut self, e: EdgeKey) -> f64 {
        self.refreshed(e).map_or(0.0, |edge| (1.0 / edge.p) * (1.0 / edge.p - 1.0))
    }

    /// Full-scan consistency check used by tests: heap order and index, the
    /// capacity bound, adjacency agreeing with the heap in both directions,
    /// and probabilities in (0, 1].
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if !self.heap.check_invariants() {
            return Err("heap order or index broken".into());
        }
        if self.heap.len() > self.capacity {
            return Err(format!("{} edges exceed capacity {}", self.heap.len(), self.capacity));
        }
        let expected = (self.t as usize).min(self.capacity);
        if self.heap.len() < expected && self.last_admission.is_some() {
            return Err(format!("{} edges, expected {}", self.heap.len(), expected));
        }
        let mut adj_edges = 0usize;
        for (&u, vs) in &self.by_u {
            if vs.is_empty() {
                return Err(format!("empty adjacency list for U{u}"));
            }
            for &v in vs {
                if !self.heap.contains(&EdgeKey::new(u, v)) {
                    return Err(format!("adjacency has unsampled edge ({u},{v})"));
                }
                if !self.by_v.get(&v).is_some_and(|us| us.contains(&u)) {
                    return Err(format!("edge ({u},{v}) missing from V adjacency"));
                }
            }
            adj_edges += vs.len();
        }
        let v_edges: usize = self.by_v.values().map(Vec::len).sum();
        if adj_edges != self.heap.len() || v_edges != self.heap.len() {
            return Err("adjacency size disagrees with heap".into());
        }
        for edge in self.heap.iter() {
            if !(edge.p > 0.0 && edge.p <= 1.0) {
                return Err(format!("p = {} out of range for {}", edge.p, edge.key));
            }
            if !(edge.priority().is_finite() && edge.priority() > 0.0) {
                return Err(format!("bad priority for {}", edge.key));
            }
        }
        Ok(())
    }
}

fn detach(map: &mut FxHashMap<u64, Vec<u64>>, node: u64, nbr: u64) {
    if let Some(list) = map.get_mut(&node) {
        if let Some(i) = list.iter().position(|&x| x == nbr) {
            list.remove(i);
        }
        if list.is_empty() {
            map.remove(&node);
        }
    }
}

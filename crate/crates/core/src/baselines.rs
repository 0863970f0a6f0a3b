//! Reference estimators: a uniform edge reservoir (`simple`) and per-node
//! coordinated bottom-L neighbor sketches (`CnHash`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::hash::node_hash;
use crate::table::{SimilarityEntry, SimilarityTable};
use crate::types::{EdgeKey, NodeId, PairKey, Side};

/// Uniform reservoir over the edge stream; every prefix of length `t` leaves
/// each edge sampled with probability `min(1, m / t)`.
#[derive(Debug, Clone)]
pub struct UniformSample {
    capacity: usize,
    entries: Vec<EdgeKey>,
    by_u: FxHashMap<u64, FxHashSet<u64>>,
    by_v: FxHashMap<u64, FxHashSet<u64>>,
    t: u64,
    rng: ChaCha8Rng,
}

impl UniformSample {
    pub fn new(capacity: usize, seed: u64) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        UniformSample {
            capacity,
            entries: Vec::with_capacity(capacity.min(1 << 20)),
            by_u: FxHashMap::default(),
            by_v: FxHashMap::default(),
            t: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, e: EdgeKey) -> bool {
        self.by_u.get(&e.u).is_some_and(|s| s.contains(&e.v))
    }

    pub fn entries(&self) -> &[EdgeKey] {
        &self.entries
    }

    /// Current inclusion probability `min(1, m / t)`.
    pub fn sampling_rate(&self) -> f64 {
        if self.t == 0 {
            1.0
        } else {
            (self.capacity as f64 / self.t as f64).min(1.0)
        }
    }

    pub fn simple_process(&mut self, e: EdgeKey) {
        self.t += 1;
        if self.entries.len() < self.capacity {
            self.entries.push(e);
            self.attach(e);
            return;
        }
        let j = self.rng.random_range(0..self.t);
        if (j as usize) < self.capacity {
            let old = std::mem::replace(&mut self.entries[j as usize], e);
            self.detach(old);
            self.attach(e);
        }
    }

    fn attach(&mut self, e: EdgeKey) {
        self.by_u.entry(e.u).or_default().insert(e.v);
        self.by_v.entry(e.v).or_default().insert(e.u);
    }

    fn detach(&mut self, e: EdgeKey) {
        for (map, a, b) in [(&mut self.by_u, e.u, e.v), (&mut self.by_v, e.v, e.u)] {
            if let Some(s) = map.get_mut(&a) {
                s.remove(&b);
                if s.is_empty() {
                    map.remove(&a);
                }
            }
        }
    }

    fn sampled_neighbors(&self, node: NodeId) -> Option<&FxHashSet<u64>> {
        match node.side {
            Side::U => self.by_u.get(&node.id),
            Side::V => self.by_v.get(&node.id),
        }
    }

    /// Sampled common neighbors scaled by `1 / p^2`.
    pub fn simple_estimate(&self, x: NodeId, y: NodeId) -> f64 {
        debug_assert_eq!(x.side, y.side);
        let (Some(a), Some(b)) = (self.sampled_neighbors(x), self.sampled_neighbors(y)) else {
            return 0.0;
        };
        let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        let common = small.iter().filter(|w| large.contains(w)).count();
        let p = self.sampling_rate();
        common as f64 / (p * p)
    }

    /// Estimates for every pair with a sampled common neighbor. The update
    /// count of a pair is its sampled common-neighbor count.
    pub fn table(&self, side: Side) -> SimilarityTable {
        let centers = match side {
            Side::U => &self.by_v,
            Side::V => &self.by_u,
        };
        let mut counts: FxHashMap<PairKey, u64> = FxHashMap::default();
        for nbrs in centers.values() {
            let list: Vec<u64> = nbrs.iter().copied().collect();
            for i in 0..list.len() {
                for j in (i + 1)..list.len() {
                    *counts.entry(PairKey::canonical(side, list[i], list[j])).or_default() += 1;
                }
            }
        }
        let p = self.sampling_rate();
        SimilarityTable::from_entries(counts.into_iter().map(|(key, c)| SimilarityEntry {
            key,
            estimate: c as f64 / (p * p),
            update_count: c,
        }))
    }

    pub fn check_consistency(&self) -> bool {
        let from_adj: usize = self.by_u.values().map(FxHashSet::len).sum();
        from_adj == self.entries.len() && self.entries.iter().all(|&e| self.contains(e))
    }
}

/// Bottom-L neighbor sketch of one node under a shared hash, plus its exact
/// degree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSketch {
    pub owner: NodeId,
    /// `(hash, neighbor id)`, ascending.
    pub neighbors: Vec<(u64, u64)>,
    pub degree: u64,
}

impl NodeSketch {
    fn new(owner: NodeId) -> Self {
        NodeSketch {
            owner,
            neighbors: Vec::new(),
            degree: 0,
        }
    }

    fn offer(&mut self, item: (u64, u64), limit: usize) {
        self.degree += 1;
        if self.neighbors.len() >= limit {
            if item >= *self.neighbors.last().expect("limit >= 1") {
                return;
            }
            self.neighbors.pop();
        }
        let at = self.neighbors.partition_point(|x| *x < item);
        self.neighbors.insert(at, item);
    }

    pub fn contains(&self, item: &(u64, u64)) -> bool {
        self.neighbors.binary_search(item).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CnEstimate {
    pub value: f64,
    /// False when either node has never been seen.
    pub sketched: bool,
    /// Matches found within the compared sketch prefix.
    pub matches: u64,
}

#[derive(Debug, Clone)]
pub struct CnHash {
    limit: usize,
    seed: u64,
    sketches: [FxHashMap<u64, NodeSketch>; 2],
}

impl CnHash {
    pub fn new(limit: usize, seed: u64) -> Self {
        assert!(limit > 0, "sketch size must be positive");
        CnHash {
            limit,
            seed,
            sketches: [FxHashMap::default(), FxHashMap::default()],
        }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn node_count(&self) -> usize {
        self.sketches[0].len() + self.sketches[1].len()
    }

    /// Stored sketch entries across all nodes.
    pub fn stored_entries(&self) -> usize {
        self.sketches.iter().flat_map(|m| m.values()).map(|s| s.neighbors.len()).sum()
    }

    pub fn sketch(&self, node: NodeId) -> Option<&NodeSketch> {
        self.sketches[node.side.index()].get(&node.id)
    }

    pub fn cnhash_process(&mut self, e: EdgeKey) {
        let hv = (node_hash(e.v, self.seed), e.v);
        let hu = (node_hash(e.u, self.seed), e.u);
        self.sketches[0]
            .entry(e.u)
            .or_insert_with(|| NodeSketch::new(NodeId::u(e.u)))
            .offer(hv, self.limit);
        self.sketches[1]
            .entry(e.v)
            .or_insert_with(|| NodeSketch::new(NodeId::v(e.v)))
            .offer(hu, self.limit);
    }

    /// Coordinated bottom-k estimate of the common-neighbor count; exact when
    /// both degrees are within the sketch size.
    pub fn cnhash_estimate(&self, x: NodeId, y: NodeId) -> CnEstimate {
        let (Some(a), Some(b)) = (self.sketch(x), self.sketch(y)) else {
            return CnEstimate {
                value: 0.0,
                sketched: false,
                matches: 0,
            };
        };
        if a.degree as usize <= self.limit && b.degree as usize <= self.limit {
            let common = a.neighbors.iter().filter(|item| b.contains(item)).count() as u64;
            return CnEstimate {
                value: common as f64,
                sketched: true,
                matches: common,
            };
        }
        // Merge the two ascending lists, keeping the k smallest of the union.
        let (mut i, mut j) = (0, 0);
        let (mut taken, mut common) = (0usize, 0u64);
        let union = {
            let mut u = a.neighbors.clone();
            u.extend(b.neighbors.iter().copied());
            u.sort_unstable();
            u.dedup();
            u.len()
        };
        let k = self.limit.min(union);
        while taken < k {
            match (a.neighbors.get(i), b.neighbors.get(j)) {
                (Some(p), Some(q)) if p == q => {
                    common += 1;
                    i += 1;
                    j += 1;
                }
                (Some(p), Some(q)) if p < q => i += 1,
                (Some(_), Some(_)) => j += 1,
                (Some(_), None) => i += 1,
                (None, Some(_)) => j += 1,
                (None, None) => break,
            }
            taken += 1;
        }
        if k == 0 {
            return CnEstimate {
                value: 0.0,
                sketched: true,
                matches: 0,
            };
        }
        let jac = common as f64 / k as f64;
        CnEstimate {
            value: jac * (a.degree + b.degree) as f64 / (1.0 + jac),
            sketched: true,
            matches: common,
        }
    }

    /// Estimates for the given pairs; update count is the sketch match count.
    pub fn table_for_pairs(&self, pairs: impl IntoIterator<Item = PairKey>) -> SimilarityTable {
        SimilarityTable::from_entries(pairs.into_iter().filter_map(|key| {
            let est = self.cnhash_estimate(
                NodeId { side: key.side, id: key.a },
                NodeId { side: key.side, id: key.b },
            );
            (est.value > 0.0).then_some(SimilarityEntry {
                key,
                estimate: est.value,
                update_count: est.matches,
            })
        }))
    }

    /// Estimates for pairs sharing at least one sketched neighbor, found via an
    /// inverted index from sketched neighbor to owners. Stops collecting
    /// candidates after `max_pairs`.
    pub fn candidate_table(&self, side: Side, max_pairs: usize) -> SimilarityTable {
        let mut owners: FxHashMap<u64, Vec<u64>> = FxHashMap::default();
        for (&id, sketch) in &self.sketches[side.index()] {
            for &(_, w) in &sketch.neighbors {
                owners.entry(w).or_default().push(id);
            }
        }
        let mut candidates: FxHashSet<PairKey> = FxHashSet::default();
        'outer: for list in owners.values() {
            for i in 0..list.len() {
                for j in (i + 1)..list.len() {
                    candidates.insert(PairKey::canonical(side, list[i], list[j]));
                    if candidates.len() >= max_pairs {
                        break 'outer;
                    }
                }
            }
        }
        self.table_for_pairs(candidates)
    }
}

/// Edge sampling rate with the same memory as a set of per-node sketches:
/// `nodes * per_sketch_cost / (stream_len * per_edge_cost)`, capped at 1.
pub fn cnhash_space_equivalent(
    nodes: u64,
    per_edge_cost: f64,
    per_sketch_cost: f64,
    stream_len: u64,
) -> f64 {
    ((nodes as f64 * per_sketch_cost) / (stream_len as f64 * per_edge_cost)).min(1.0)
}

//! Aggregation of the similarity-update stream into per-pair estimates.
//!
//! [`ExactAggregator`] keeps one running sum per key. [`PriorityAggregator`]
//! keeps at most `n` keys. A key's weight is the raw sum of the updates it
//! received since admission and its priority is that weight over a random
//! number drawn at admission. When a new key arrives at a full reservoir the
//! lowest-priority key among the `n + 1` is dropped and the threshold `z` is
//! raised to that priority. Each resident key carries the probability `p` of
//! having survived every threshold since admission, maintained like the edge
//! reservoir's `p`, and its estimate weights every update by the probability
//! ratio between the update's arrival and now, which makes the estimate
//! unbiased for the key's total.

use std::cmp::Ordering;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::pair_beta;
use crate::heap::{IndexedMinHeap, Keyed};
use crate::sampler::UpdateSink;
use crate::table::{SimilarityEntry, SimilarityTable};
use crate::types::PairKey;

/// Storage budget of an aggregator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Capacity {
    Bounded(usize),
    Unbounded,
}

pub trait Aggregator {
    /// Adds `value` to the running estimate for `key`.
    fn add(&mut self, key: PairKey, value: f64) -> Result<()>;

    /// Current estimates. Read-only; callable between any two adds.
    fn query(&self) -> SimilarityTable;

    /// Number of resident keys.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_value(value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidUpdate(value))
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExactAggregator {
    sums: FxHashMap<PairKey, (f64, u64)>,
}

impl ExactAggregator {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Aggregator for ExactAggregator {
    fn add(&mut self, key: PairKey, value: f64) -> Result<()> {
        check_value(value)?;
        let slot = self.sums.entry(key).or_insert((0.0, 0));
        slot.0 += value;
        slot.1 += 1;
        Ok(())
    }

    fn query(&self) -> SimilarityTable {
        SimilarityTable::from_entries(self.sums.iter().map(|(&key, &(estimate, update_count))| SimilarityEntry {
            key,
            estimate,
            update_count,
        }))
    }

    fn len(&self) -> usize {
        self.sums.len()
    }
}

#[derive(Debug, Clone, Copy)]
struct Resident {
    key: PairKey,
    raw: f64,
    beta: f64,
    p: f64,
    estimate: f64,
    count: u64,
}

impl Resident {
    #[inline]
    fn priority(&self) -> f64 {
        self.raw / self.beta
    }

    /// Inclusion probability and estimate after refreshing against `z`.
    #[inline]
    fn refreshed(&self, z: f64) -> (f64, f64) {
        if z > 0.0 {
            let p = self.p.min(self.raw / z);
            (p, self.estimate * (self.p / p))
        } else {
            (self.p, self.estimate)
        }
    }
}

impl Ord for Resident {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority()
            .total_cmp(&other.priority())
            .then_with(|| self.beta.total_cmp(&other.beta))
            .then_with(|| self.key.cmp(&other.key))
    }
}

impl PartialOrd for Resident {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Resident {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Resident {}

impl Keyed for Resident {
    type Key = PairKey;
    fn key(&self) -> PairKey {
        self.key
    }
}

#[derive(Debug, Clone)]
pub struct PriorityAggregator {
    capacity: usize,
    seed: u64,
    heap: IndexedMinHeap<Resident>,
    z: f64,
    admissions: u64,
}

impl PriorityAggregator {
    pub fn new(capacity: usize, seed: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidCapacity("aggregator capacity must be >= 1".into()));
        }
        Ok(PriorityAggregator {
            capacity,
            seed,
            heap: IndexedMinHeap::with_capacity(capacity.min(1 << 20) + 1),
            z: 0.0,
            admissions: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Largest priority dropped so far.
    pub fn threshold(&self) -> f64 {
        self.z
    }

    /// Lowest priority currently resident.
    pub fn min_priority(&self) -> Option<f64> {
        self.heap.peek().map(Resident::priority)
    }

    pub fn check_invariants(&self) -> bool {
        self.heap.check_invariants() && self.heap.len() <= self.capacity
    }
}

impl Aggregator for PriorityAggregator {
    fn add(&mut self, key: PairKey, value: f64) -> Result<()> {
        check_value(value)?;
        let z = self.z;
        let hit = self.heap.modify(&key, |r| {
            let (p, estimate) = r.refreshed(z);
            r.p = p;
            r.estimate = estimate + value;
            r.raw += value;
            r.count += 1;
        });
        if hit.is_some() {
            return Ok(());
        }

        self.admissions += 1;
        let candidate = Resident {
            key,
            raw: value,
            beta: pair_beta(key, self.seed, self.admissions),
            p: 1.0,
            estimate: value,
            count: 1,
        };
        if self.heap.len() < self.capacity {
            self.heap.push(candidate);
        } else if candidate < *self.heap.peek().expect("full reservoir is non-empty") {
            self.z = self.z.max(candidate.priority());
        } else {
            self.heap.push(candidate);
            let dropped = self.heap.pop().expect("non-empty");
            self.z = self.z.max(dropped.priority());
        }
        Ok(())
    }

    fn query(&self) -> SimilarityTable {
        SimilarityTable::from_entries(self.heap.iter().map(|r| SimilarityEntry {
            key: r.key,
            estimate: r.refreshed(self.z).1,
            update_count: r.count,
        }))
    }

    fn len(&self) -> usize {
        self.heap.len()
    }
}

/// Runtime choice between exact and fixed-storage aggregation.
#[derive(Debug, Clone)]
pub enum AggregatorKind {
    Exact(ExactAggregator),
    Priority(PriorityAggregator),
}

impl AggregatorKind {
    pub fn initialize(capacity: Capacity, seed: u64) -> Result<Self> {
        Ok(match capacity {
            Capacity::Unbounded => AggregatorKind::Exact(ExactAggregator::new()),
            Capacity::Bounded(n) => AggregatorKind::Priority(PriorityAggregator::new(n, seed)?),
        })
    }

    pub fn capacity(&self) -> Capacity {
        match self {
            AggregatorKind::Exact(_) => Capacity::Unbounded,
            AggregatorKind::Priority(p) => Capacity::Bounded(p.capacity()),
        }
    }
}

impl Aggregator for AggregatorKind {
    fn add(&mut self, key: PairKey, value: f64) -> Result<()> {
        match self {
            AggregatorKind::Exact(a) => a.add(key, value),
            AggregatorKind::Priority(a) => a.add(key, value),
        }
    }

    fn query(&self) -> SimilarityTable {
        match self {
            AggregatorKind::Exact(a) => a.query(),
            AggregatorKind::Priority(a) => a.query(),
        }
    }

    fn len(&self) -> usize {
        match self {
            AggregatorKind::Exact(a) => a.len(),
            AggregatorKind::Priority(a) => a.len(),
        }
    }
}

// Values coming from the edge sampler are inverse probabilities, always >= 1.
macro_rules! sink_via_add {
    ($($t:ty),*) => {$(
        impl UpdateSink for $t {
            fn emit(&mut self, key: PairKey, value: f64) {
                Aggregator::add(self, key, value).expect("sampler updates are finite and >= 1");
            }
        }
    )*};
}

sink_via_add!(ExactAggregator, PriorityAggregator, AggregatorKind);

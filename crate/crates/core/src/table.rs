use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::types::{PairKey, Side};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityEntry {
    pub key: PairKey,
    pub estimate: f64,
    pub update_count: u64,
}

/// Snapshot of estimated pair similarities, split by projection side and
/// sorted by key within each side.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTable {
    pub u_pairs: Vec<SimilarityEntry>,
    pub v_pairs: Vec<SimilarityEntry>,
}

impl SimilarityTable {
    pub fn from_entries(entries: impl IntoIterator<Item = SimilarityEntry>) -> Self {
        let mut table = SimilarityTable::default();
        for entry in entries {
            match entry.key.side {
                Side::U => table.u_pairs.push(entry),
                Side::V => table.v_pairs.push(entry),
            }
        }
        table.u_pairs.sort_by_key(|e| e.key);
        table.v_pairs.sort_by_key(|e| e.key);
        table
    }

    pub fn side(&self, side: Side) -> &[SimilarityEntry] {
        match side {
            Side::U => &self.u_pairs,
            Side::V => &self.v_pairs,
        }
    }

    pub fn len(&self) -> usize {
        self.u_pairs.len() + self.v_pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &SimilarityEntry> {
        self.u_pairs.iter().chain(self.v_pairs.iter())
    }

    pub fn get(&self, key: &PairKey) -> Option<&SimilarityEntry> {
        let list = self.side(key.side);
        list.binary_search_by_key(key, |e| e.key).ok().map(|i| &list[i])
    }

    /// Keeps only the entries built from at least `threshold` updates.
    pub fn filter_by_count(&self, threshold: u64) -> SimilarityTable {
        let keep = |v: &[SimilarityEntry]| v.iter().filter(|e| e.update_count >= threshold).copied().collect();
        SimilarityTable {
            u_pairs: keep(&self.u_pairs),
            v_pairs: keep(&self.v_pairs),
        }
    }

    /// One side as a lookup map.
    pub fn side_map(&self, side: Side) -> FxHashMap<PairKey, SimilarityEntry> {
        self.side(side).iter().map(|e| (e.key, *e)).collect()
    }
}

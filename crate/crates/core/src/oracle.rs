//! Exact streaming common-neighbor counts for both projections.
//!
//! Counts are stored sparsely, only for pairs with at least one common
//! neighbor, keyed by 32-bit node ids. A pair budget bounds memory; once it is
//! exceeded the projection reports [`Error::OracleOverflow`] and stops counting.

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::types::{EdgeKey, NodeId, PairKey, Side};

type Counts = FxHashMap<(u32, u32), u32>;

#[derive(Debug, Clone)]
pub struct ExactProjection {
    by_u: FxHashMap<u64, Vec<u64>>,
    by_v: FxHashMap<u64, Vec<u64>>,
    edges: FxHashSet<EdgeKey>,
    counts: [Option<Counts>; 2],
    budget: Option<usize>,
    overflowed: bool,
}

impl Default for ExactProjection {
    fn default() -> Self {
        Self::new()
    }
}

impl ExactProjection {
    /// Tracks both projections without a budget.
    pub fn new() -> Self {
        Self::with_sides(&[Side::U, Side::V])
    }

    /// Tracks only the listed projections. Adjacency is always complete.
    pub fn with_sides(sides: &[Side]) -> Self {
        let mut counts = [None, None];
        for &s in sides {
            counts[s.index()] = Some(Counts::default());
        }
        ExactProjection {
            by_u: FxHashMap::default(),
            by_v: FxHashMap::default(),
            edges: FxHashSet::default(),
            counts,
            budget: None,
            overflowed: false,
        }
    }

    /// Caps the total number of stored pairs across tracked sides.
    pub fn with_budget(mut self, max_pairs: usize) -> Self {
        self.budget = Some(max_pairs);
        self
    }

    pub fn tracks(&self, side: Side) -> bool {
        self.counts[side.index()].is_some()
    }

    pub fn overflowed(&self) -> bool {
        self.overflowed
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_count(&self, side: Side) -> usize {
        match side {
            Side::U => self.by_u.len(),
            Side::V => self.by_v.len(),
        }
    }

    pub fn neighbors(&self, node: NodeId) -> &[u64] {
        let map = match node.side {
            Side::U => &self.by_u,
            Side::V => &self.by_v,
        };
        map.get(&node.id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Adds one edge, counting every wedge it closes.
    pub fn oracle_process(&mut self, e: EdgeKey) -> Result<()> {
        if self.overflowed {
            return Err(Error::OracleOverflow { budget: self.budget.unwrap_or(usize::MAX) });
        }
        if e.u > u32::MAX as u64 || e.v > u32::MAX as u64 {
            return Err(Error::Config(format!("oracle needs 32-bit node ids, got {e}")));
        }
        if !self.edges.insert(e) {
            return Err(Error::DuplicateEdge(e));
        }
        if let (Some(counts), Some(us)) = (&mut self.counts[0], self.by_v.get(&e.v)) {
            for &u2 in us {
                bump(counts, e.u, u2);
            }
        }
        if let (Some(counts), Some(vs)) = (&mut self.counts[1], self.by_u.get(&e.u)) {
            for &v2 in vs {
                bump(counts, e.v, v2);
            }
        }
        self.by_u.entry(e.u).or_default().push(e.v);
        self.by_v.entry(e.v).or_default().push(e.u);
        if let Some(budget) = self.budget {
            if self.total_pairs() > budget {
                self.overflowed = true;
                self.counts = [None, None];
                return Err(Error::OracleOverflow { budget });
            }
        }
        Ok(())
    }

    pub fn total_pairs(&self) -> usize {
        self.counts.iter().flatten().map(|c| c.len()).sum()
    }

    pub fn pair_count(&self, side: Side) -> usize {
        self.counts[side.index()].as_ref().map_or(0, |c| c.len())
    }

    /// Exact similarity of a pair; 0 if the pair shares no neighbor or the side
    /// is untracked.
    pub fn count(&self, key: &PairKey) -> u32 {
        let (Ok(a), Ok(b)) = (u32::try_from(key.a), u32::try_from(key.b)) else {
            return 0;
        };
        self.counts[key.side.index()]
            .as_ref()
            .and_then(|c| c.get(&(a, b)))
            .copied()
            .unwrap_or(0)
    }

    /// All pairs with positive similarity on `side`, in arbitrary order.
    pub fn pairs(&self, side: Side) -> impl Iterator<Item = (PairKey, u32)> + Clone + '_ {
        self.counts[side.index()].iter().flat_map(move |c| {
            c.iter().map(move |(&(a, b), &n)| {
                (
                    PairKey {
                        side,
                        a: a as u64,
                        b: b as u64,
                    },
                    n,
                )
            })
        })
    }

    /// Number of distinct similarity values on `side` (the number of dense ranks).
    pub fn distinct_values(&self, side: Side) -> usize {
        self.pairs(side).map(|(_, n)| n).collect::<FxHashSet<u32>>().len()
    }

    /// Total similarity of `node` to all others on its side, computed from
    /// degrees as the sum over its neighbors of (neighbor degree - 1).
    pub fn node_total_similarity(&self, node: NodeId) -> u64 {
        self.neighbors(node)
            .iter()
            .map(|&w| {
                let other = NodeId { side: node.side.other(), id: w };
                self.neighbors(other).len() as u64 - 1
            })
            .sum()
    }

    /// Row sum of the stored counts for `node`. Full scan.
    pub fn row_sum(&self, node: NodeId) -> u64 {
        self.pairs(node.side)
            .filter(|(k, _)| k.a == node.id || k.b == node.id)
            .map(|(_, n)| n as u64)
            .sum()
    }

    /// Compares the stored counts of every tracked side with the off-diagonal
    /// entries of the dense product of the biadjacency matrix and its transpose.
    pub fn matrix_check(&self) -> Result<bool> {
        const LIMIT: usize = 2000;
        for side in [Side::U, Side::V] {
            let n = self.node_count(side);
            if n > LIMIT {
                return Err(Error::SizeGuard(n, LIMIT));
            }
        }
        let index = |map: &FxHashMap<u64, Vec<u64>>| -> Vec<u64> {
            let mut ids: Vec<u64> = map.keys().copied().collect();
            ids.sort_unstable();
            ids
        };
        let us = index(&self.by_u);
        let vs = index(&self.by_v);
        let col: FxHashMap<u64, usize> = vs.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let row: FxHashMap<u64, usize> = us.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        // Biadjacency A, |U| x |V|.
        let mut a = vec![vec![0u32; vs.len()]; us.len()];
        for e in &self.edges {
            a[row[&e.u]][col[&e.v]] = 1;
        }
        for side in [Side::U, Side::V] {
            if !self.tracks(side) {
                continue;
            }
            let (ids, n) = match side {
                Side::U => (&us, us.len()),
                Side::V => (&vs, vs.len()),
            };
            let entry = |i: usize, j: usize| -> u32 {
                match side {
                    Side::U => (0..vs.len()).map(|k| a[i][k] * a[j][k]).sum(),
                    Side::V => (0..us.len()).map(|k| a[k][i] * a[k][j]).sum(),
                }
            };
            let mut nonzero = 0usize;
            for i in 0..n {
                for j in (i + 1)..n {
                    let dense = entry(i, j);
                    let stored = self.count(&PairKey::canonical(side, ids[i], ids[j]));
                    if dense != stored {
                        return Ok(false);
                    }
                    nonzero += usize::from(dense > 0);
                }
            }
            if nonzero != self.pair_count(side) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[inline]
fn bump(counts: &mut Counts, x: u64, y: u64) {
    let (a, b) = if x < y { (x, y) } else { (y, x) };
    *counts.entry((a as u32, b as u32)).or_insert(0) += 1;
}

//! Accuracy of an estimated similarity table against exact counts.
//!
//! Ranks are dense and descending: the largest value has rank 1, equal values
//! share a rank, and ranks are consecutive. Estimates are floored before
//! ranking. Top-k metrics are taken over the pairs whose *actual* rank is at
//! most `k`. A pair missing from the estimate table scores an estimate of 0 and
//! an estimated rank one past the worst rank present.

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::SimilarityTable;
use crate::types::{PairKey, Side};

/// Dense descending ranks of `values`.
pub fn dense_rank(values: &[i64]) -> Vec<u32> {
    let ranks = rank_map(values.iter().copied());
    values.iter().map(|v| ranks[v]).collect()
}

/// Dense descending ranks of the integer parts of `estimates`.
pub fn dense_rank_estimates(estimates: &[f64]) -> Vec<u32> {
    let floored: Vec<i64> = estimates.iter().map(|x| x.floor() as i64).collect();
    dense_rank(&floored)
}

fn rank_map(values: impl Iterator<Item = i64>) -> FxHashMap<i64, u32> {
    let mut distinct: Vec<i64> = values.collect::<FxHashSet<i64>>().into_iter().collect();
    distinct.sort_unstable_by(|a, b| b.cmp(a));
    distinct.into_iter().enumerate().map(|(i, v)| (v, i as u32 + 1)).collect()
}

/// Ascending ranks with ties replaced by their average position (1-based).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &slot in &idx[i..=j] {
            out[slot] = avg;
        }
        i = j + 1;
    }
    out
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman correlation: Pearson on average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedPair {
    pub key: PairKey,
    pub actual: u64,
    pub estimate: f64,
    pub actual_rank: u32,
    pub estimated_rank: u32,
    pub update_count: u64,
}

/// Exact pairs joined with their estimates and both dense ranks, ordered by
/// actual rank then key.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RankedSimilarity {
    pub pairs: Vec<RankedPair>,
    /// Number of distinct actual values, i.e. the deepest actual rank.
    pub max_actual_rank: u32,
    /// Deepest estimated rank present in the table.
    pub max_estimated_rank: u32,
}

impl RankedSimilarity {
    /// Joins exact counts on `side` with `estimates`. With `rank_limit`, only
    /// pairs of actual rank at most the limit are kept, though ranks are still
    /// computed over everything.
    pub fn build<I>(actual: I, estimates: &SimilarityTable, side: Side, rank_limit: Option<u32>) -> Self
    where
        I: IntoIterator<Item = (PairKey, u64)>,
        I::IntoIter: Clone,
    {
        let actual = actual.into_iter();
        let mut distinct: Vec<u64> = actual
            .clone()
            .map(|(_, c)| c)
            .collect::<FxHashSet<u64>>()
            .into_iter()
            .collect();
        distinct.sort_unstable_by(|a, b| b.cmp(a));
        let max_actual_rank = distinct.len() as u32;
        let floor_value = match rank_limit {
            Some(k) if (k as usize) < distinct.len() => distinct[(k as usize).max(1) - 1],
            _ => 0,
        };
        let actual_rank: FxHashMap<u64, u32> =
            distinct.iter().enumerate().map(|(i, &v)| (v, i as u32 + 1)).collect();

        let est_side = estimates.side(side);
        let est_rank = rank_map(est_side.iter().map(|e| e.estimate.floor() as i64));
        let max_estimated_rank = est_rank.len() as u32;

        let mut pairs: Vec<RankedPair> = actual
            .filter(|&(_, c)| c >= floor_value && c > 0)
            .map(|(key, c)| {
                let (estimate, estimated_rank, update_count) = match estimates.get(&key) {
                    Some(e) => (e.estimate, est_rank[&(e.estimate.floor() as i64)], e.update_count),
                    None => (0.0, max_estimated_rank + 1, 0),
                };
                RankedPair {
                    key,
                    actual: c,
                    estimate,
                    actual_rank: actual_rank[&c],
                    estimated_rank,
                    update_count,
                }
            })
            .collect();
        pairs.sort_by(|a, b| a.actual_rank.cmp(&b.actual_rank).then(a.key.cmp(&b.key)));
        RankedSimilarity {
            pairs,
            max_actual_rank,
            max_estimated_rank,
        }
    }

    /// Pairs of actual rank at most `k`.
    pub fn top_k(&self, k: u32) -> &[RankedPair] {
        let end = self.pairs.partition_point(|p| p.actual_rank <= k);
        &self.pairs[..end]
    }

    /// Spearman correlation between actual and estimated ranks over the top-k
    /// actual ranks.
    pub fn top_k_correlation(&self, k: u32) -> Result<f64> {
        let top = self.top_k(k);
        if top.len() < 2 {
            return Err(Error::Undefined("fewer than two pairs within the top-k ranks"));
        }
        let actual: Vec<f64> = top.iter().map(|p| p.actual_rank as f64).collect();
        let est: Vec<f64> = top.iter().map(|p| p.estimated_rank as f64).collect();
        spearman(&actual, &est).ok_or(Error::Undefined("rank vector has zero variance"))
    }

    /// Summed absolute error over summed actual similarity, top-k actual ranks.
    pub fn weighted_relative_error(&self, k: u32) -> Result<f64> {
        let top = self.top_k(k);
        let denom: f64 = top.iter().map(|p| p.actual as f64).sum();
        if denom <= 0.0 {
            return Err(Error::Undefined("no actual similarity within the top-k ranks"));
        }
        let num: f64 = top.iter().map(|p| (p.estimate - p.actual as f64).abs()).sum();
        Ok(num / denom)
    }
}

/// Drops estimates built from fewer than `threshold` updates.
pub fn filter_by_count(table: &SimilarityTable, threshold: u64) -> SimilarityTable {
    table.filter_by_count(threshold)
}

//! Fixtures shared by the integration test targets.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rustc_hash::{FxHashMap, FxHashSet};
use simproj_core::metrics::RankedSimilarity;
use simproj_core::oracle::ExactProjection;
use simproj_core::{
    Aggregator, EdgeKey, EdgeReservoir, Error, ExactAggregator, NodeId, PairKey, PriorityAggregator, SamplerMode,
    Side, SimilarityEntry, SimilarityTable, SimilarityUpdate,
};

/// Monte Carlo seed count; `SIMPROJ_MC_SEEDS` overrides the default of 2·10^4.
pub fn mc_seeds() -> u64 {
    std::env::var("SIMPROJ_MC_SEEDS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(20_000)
}

/// Twenty distinct edges with overlapping neighborhoods on both sides.
pub fn twenty_edge_stream() -> Vec<EdgeKey> {
    [
        (0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (3, 0), (0, 2), (2, 1), (4, 0), (1, 2),
        (3, 1), (0, 3), (2, 2), (4, 1), (1, 3), (3, 2), (0, 4), (2, 3), (4, 2), (5, 0),
    ]
    .into_iter()
    .map(|(u, v)| EdgeKey::new(u, v))
    .collect()
}

/// Fifty updates over ten keys with skewed frequencies and values.
pub fn fifty_update_stream() -> Vec<(PairKey, f64)> {
    (0..50u64)
        .map(|i| {
            let k = (i % 13) % 10;
            let key = PairKey::new(Side::U, k, 100).unwrap();
            (key, 1.0 + (i % 4) as f64 * 0.75 + if k == 0 { 5.0 } else { 0.0 })
        })
        .collect()
}

#[derive(Default, Clone, Copy)]
pub struct Moments {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1.0;
        self.sum += x;
        self.sum_sq += x * x;
    }
    pub fn mean(&self) -> f64 {
        self.sum / self.n
    }
    pub fn variance(&self) -> f64 {
        (self.sum_sq - self.sum * self.sum / self.n) / (self.n - 1.0)
    }
    pub fn std_err(&self) -> f64 {
        (self.variance() / self.n).sqrt()
    }
}

/// Collects Monte Carlo comparisons that miss their target by more than
/// three standard errors.
#[derive(Default)]
pub struct Report {
    pub failures: Vec<String>,
    pub checked: usize,
    pub worst_z: f64,
}

impl Report {
    pub fn check(&mut self, m: &Moments, target: f64, label: impl std::fmt::Display) {
        self.checked += 1;
        let se = m.std_err();
        let z = if se == 0.0 {
            if (m.mean() - target).abs() < 1e-9 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (m.mean() - target) / se
        };
        self.worst_z = self.worst_z.max(z.abs());
        if z.abs() > 3.0 {
            self.failures.push(format!("{label}: mean {} vs {target} (z = {z:.2})", m.mean()));
        }
    }
}

pub struct SamplerStats {
    pub s_hat: Vec<Moments>,
    pub v_hat: Vec<Moments>,
    pub c_hat: FxHashMap<PairKey, Moments>,
    pub exact: Vec<(PairKey, u32)>,
}

/// Runs the sampler over the twenty-edge stream once per seed and records
/// the edge estimator, its variance estimate and the similarity estimates at
/// the end of the stream.
pub fn simulate(mode: SamplerMode, m: usize, seeds: u64) -> SamplerStats {
    let edges = twenty_edge_stream();
    let mut oracle = ExactProjection::new();
    for &e in &edges {
        oracle.oracle_process(e).unwrap();
    }
    let exact: Vec<(PairKey, u32)> = [Side::U, Side::V].iter().flat_map(|&s| oracle.pairs(s)).collect();
    let mut s_hat = vec![Moments::default(); edges.len()];
    let mut v_hat = vec![Moments::default(); edges.len()];
    let mut c_hat: FxHashMap<PairKey, Moments> = FxHashMap::default();
    for seed in 0..seeds {
        let mut r = EdgeReservoir::new(m, mode, seed).unwrap();
        let mut agg = ExactAggregator::new();
        for &e in &edges {
            r.process_edge_into(e, &mut agg).unwrap();
        }
        for (i, &e) in edges.iter().enumerate() {
            s_hat[i].push(r.edge_estimator(e));
            v_hat[i].push(r.variance_estimate(e));
        }
        let table = agg.query();
        for &(k, _) in &exact {
            c_hat.entry(k).or_default().push(table.get(&k).map_or(0.0, |e| e.estimate));
        }
    }
    SamplerStats {
        s_hat,
        v_hat,
        c_hat,
        exact,
    }
}

pub fn check_edge_estimator(stats: &SamplerStats, label: &str) -> Report {
    let mut report = Report::default();
    for (i, s) in stats.s_hat.iter().enumerate() {
        report.check(s, 1.0, format_args!("{label} edge estimator {i}"));
    }
    report
}

pub fn check_similarity(stats: &SamplerStats, label: &str) -> Report {
    let mut report = Report::default();
    for (k, c) in &stats.exact {
        report.check(&stats.c_hat[k], *c as f64, format_args!("{label} similarity {k:?}"));
    }
    report
}

pub fn check_variance(stats: &SamplerStats, label: &str) -> Report {
    let mut report = Report::default();
    for (i, (s, v)) in stats.s_hat.iter().zip(&stats.v_hat).enumerate() {
        report.check(v, s.variance(), format_args!("{label} variance estimate {i}"));
    }
    report
}

/// Feeds the fifty-update stream to a size-4 aggregator once per seed and
/// compares per-key mean estimates with the exact sums.
pub fn check_aggregator(seeds: u64) -> Report {
    let updates = fifty_update_stream();
    let mut exact: FxHashMap<PairKey, f64> = FxHashMap::default();
    for &(k, v) in &updates {
        *exact.entry(k).or_default() += v;
    }
    assert_eq!(exact.len(), 10);
    let mut est: FxHashMap<PairKey, Moments> = FxHashMap::default();
    for seed in 0..seeds {
        let mut agg = PriorityAggregator::new(4, seed).unwrap();
        for &(k, v) in &updates {
            agg.add(k, v).unwrap();
        }
        assert!(agg.len() <= 4);
        let table = agg.query();
        for k in exact.keys() {
            est.entry(*k).or_default().push(table.get(k).map_or(0.0, |e| e.estimate));
        }
    }
    let mut keys: Vec<&PairKey> = exact.keys().collect();
    keys.sort();
    let mut report = Report::default();
    for k in keys {
        report.check(&est[k], exact[k], format_args!("aggregate {k:?}"));
    }
    report
}

// ---- property tests ----

pub fn edge_stream(max_len: usize) -> impl Strategy<Value = Vec<EdgeKey>> {
    (2u64..14, 2u64..14).prop_flat_map(move |(nu, nv)| {
        prop::collection::vec((0..nu, 0..nv), 1..max_len).prop_map(|raw| {
            let mut seen = FxHashSet::default();
            raw.into_iter()
                .map(|(u, v)| EdgeKey::new(u, v))
                .filter(|e| seen.insert(*e))
                .collect()
        })
    })
}

pub fn mode() -> impl Strategy<Value = SamplerMode> {
    prop_oneof![
        Just(SamplerMode::Adaptive),
        Just(SamplerMode::Fixed),
        Just(SamplerMode::Unit)
    ]
}

fn adjacent(a: EdgeKey, b: EdgeKey) -> bool {
    a != b && (a.u == b.u || a.v == b.v)
}

/// Heap order, capacity, adjacency, threshold and weight evolution, checked
/// after every arrival against a shadow model of the weights.
pub fn reservoir_structure(stream: &[EdgeKey], cap: usize, mode: SamplerMode, seed: u64) -> Result<(), TestCaseError> {
    let mut r = EdgeReservoir::new(cap, mode, seed).unwrap();
    let mut expected: FxHashMap<EdgeKey, u64> = FxHashMap::default();
    let mut last_z = 0.0;
    let mut last_p: FxHashMap<EdgeKey, f64> = FxHashMap::default();
    for (t, &e) in stream.iter().enumerate() {
        let neighbors_u = r.degree(NodeId::v(e.v));
        let neighbors_v = r.degree(NodeId::u(e.u));
        let updates: Vec<SimilarityUpdate> = r.process_edge(e).unwrap();

        prop_assert_eq!(updates.len(), neighbors_u + neighbors_v);
        prop_assert!(updates.iter().all(|s| s.value >= 1.0 && s.value.is_finite()));
        prop_assert_eq!(updates.iter().filter(|s| s.key.side == Side::U).count(), neighbors_u);

        let arrival_weight = match mode {
            SamplerMode::Unit => 1,
            _ => expected.keys().filter(|k| adjacent(**k, e)).count() as u64 + 2,
        };
        if mode == SamplerMode::Adaptive {
            for (k, w) in expected.iter_mut() {
                if adjacent(*k, e) {
                    *w += 1;
                }
            }
        }
        expected.insert(e, arrival_weight);
        expected.retain(|k, _| r.contains(*k));

        prop_assert!(r.check_invariants().is_ok(), "{:?}", r.check_invariants());
        prop_assert_eq!(r.len(), (t + 1).min(cap));
        prop_assert_eq!(r.arrivals(), t as u64 + 1);
        prop_assert!(r.z_star() >= last_z);
        last_z = r.z_star();
        prop_assert_eq!(expected.len(), r.len());
        for edge in r.edges() {
            prop_assert_eq!(Some(&edge.weight), expected.get(&edge.key), "weight of {}", edge.key);
            if let Some(&p) = last_p.get(&edge.key) {
                prop_assert!(edge.p <= p);
            }
            prop_assert!(edge.priority() >= r.z_star());
        }
        last_p = r.edges().map(|s| (s.key, s.p)).collect();
        if let Some(min) = r.min_edge() {
            prop_assert!(r.edges().all(|s| s.priority() >= min.priority()));
        }
    }
    Ok(())
}

/// Re-offering an edge fails and leaves the reservoir untouched.
pub fn duplicate_rejection(stream: &[EdgeKey], cap: usize, pick: usize, seed: u64) -> Result<(), TestCaseError> {
    let mut r = EdgeReservoir::new(cap, SamplerMode::Adaptive, seed).unwrap();
    for &e in stream {
        r.process_edge(e).unwrap();
    }
    let before: Vec<_> = r.edges().copied().collect();
    let z = r.z_star();
    let dup = stream[pick % stream.len()];
    prop_assert!(matches!(r.process_edge(dup), Err(Error::DuplicateEdge(k)) if k == dup));
    let after: Vec<_> = r.edges().copied().collect();
    prop_assert_eq!(before, after);
    prop_assert_eq!(r.z_star(), z);
    prop_assert_eq!(r.arrivals(), stream.len() as u64);
    if r.contains(dup) {
        prop_assert!(r.insert_edge(dup).is_err());
    }
    Ok(())
}

pub fn exact_when_everything_fits(stream: &[EdgeKey], mode: SamplerMode, seed: u64) -> Result<(), TestCaseError> {
    let mut r = EdgeReservoir::new(stream.len(), mode, seed).unwrap();
    let mut agg = ExactAggregator::new();
    let mut oracle = ExactProjection::new();
    for &e in stream {
        r.process_edge_into(e, &mut agg).unwrap();
        oracle.oracle_process(e).unwrap();
    }
    prop_assert_eq!(r.z_star(), 0.0);
    let table = agg.query();
    prop_assert_eq!(table.len(), oracle.total_pairs());
    for entry in table.iter() {
        prop_assert_eq!(entry.estimate, oracle.count(&entry.key) as f64);
    }
    Ok(())
}

pub fn aggregator_bounds(updates: &[(u64, f64)], cap: usize, seed: u64) -> Result<(), TestCaseError> {
    let mut agg = PriorityAggregator::new(cap, seed).unwrap();
    let mut last_threshold = 0.0;
    let mut sums: FxHashMap<PairKey, f64> = FxHashMap::default();
    for &(k, v) in updates {
        let key = PairKey::new(Side::V, k, 99).unwrap();
        *sums.entry(key).or_default() += v;
        agg.add(key, v).unwrap();
        prop_assert!(agg.len() <= cap);
        prop_assert!(agg.check_invariants());
        prop_assert!(agg.threshold() >= last_threshold);
        last_threshold = agg.threshold();
    }
    let q1 = agg.query();
    let q2 = agg.query();
    prop_assert_eq!(&q1, &q2);
    for e in q1.iter() {
        prop_assert!(e.estimate >= 0.0 && e.estimate.is_finite());
        prop_assert!(e.update_count >= 1);
    }
    if sums.len() <= cap {
        prop_assert_eq!(agg.threshold(), 0.0);
        for e in q1.iter() {
            prop_assert!((e.estimate - sums[&e.key]).abs() <= 1e-9 * sums[&e.key]);
        }
    }
    Ok(())
}

pub fn oracle_order_free(stream: &[EdgeKey]) -> Result<(), TestCaseError> {
    let mut sorted = stream.to_vec();
    sorted.sort();
    let mut a = ExactProjection::new();
    let mut b = ExactProjection::new();
    for &e in stream {
        a.oracle_process(e).unwrap();
    }
    for &e in &sorted {
        b.oracle_process(e).unwrap();
    }
    for side in [Side::U, Side::V] {
        let pa: FxHashMap<PairKey, u32> = a.pairs(side).collect();
        let pb: FxHashMap<PairKey, u32> = b.pairs(side).collect();
        prop_assert_eq!(pa, pb);
    }
    prop_assert!(a.matrix_check().unwrap());
    // Total similarity on one side counts wedges centered on the other.
    let mut deg_v: FxHashMap<u64, u64> = FxHashMap::default();
    for e in stream {
        *deg_v.entry(e.v).or_default() += 1;
    }
    let wedges: u64 = deg_v.values().map(|d| d * (d - 1) / 2).sum();
    prop_assert_eq!(a.pairs(Side::U).map(|(_, c)| c as u64).sum::<u64>(), wedges);
    Ok(())
}

pub fn metrics_bounds(actual: &[u64], noise: &[f64], drop: &[bool], k: u32) -> Result<(), TestCaseError> {
    let keys: Vec<PairKey> = (0..actual.len() as u64)
        .map(|i| PairKey::new(Side::U, i, 1000).unwrap())
        .collect();
    let truth: Vec<(PairKey, u64)> = keys.iter().copied().zip(actual.iter().copied()).collect();
    let exact = SimilarityTable::from_entries(truth.iter().map(|&(key, c)| SimilarityEntry {
        key,
        estimate: c as f64,
        update_count: c,
    }));
    let ranked = RankedSimilarity::build(truth.iter().copied(), &exact, Side::U, None);
    prop_assert_eq!(ranked.weighted_relative_error(k).unwrap(), 0.0);
    if let Ok(c) = ranked.top_k_correlation(k) {
        prop_assert!((c - 1.0).abs() < 1e-12);
    }

    let noisy = SimilarityTable::from_entries(truth.iter().enumerate().filter(|(i, _)| !drop[*i]).map(
        |(i, &(key, c))| SimilarityEntry {
            key,
            estimate: (c as f64 + noise[i]).max(0.0),
            update_count: 1,
        },
    ));
    let ranked = RankedSimilarity::build(truth.iter().copied(), &noisy, Side::U, Some(k));
    let top = ranked.top_k(k);
    prop_assert!(top.iter().all(|p| p.actual_rank <= k));
    prop_assert!(top.windows(2).all(|w| w[0].actual_rank <= w[1].actual_rank));
    let wre = ranked.weighted_relative_error(k).unwrap();
    prop_assert!(wre >= 0.0 && wre.is_finite());
    if let Ok(c) = ranked.top_k_correlation(k) {
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&c));
    }
    Ok(())
}

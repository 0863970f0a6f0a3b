//! Property tests over random streams: reservoir structure, weights and
//! thresholds, duplicate handling, the aggregator, the oracle and the metrics.

mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn reservoir_invariants(stream in edge_stream(90), cap in 1usize..16, mode in mode(), seed in any::<u64>()) {
        reservoir_structure(&stream, cap, mode, seed)?;
    }

    #[test]
    fn duplicates_rejected_without_side_effects(stream in edge_stream(60), cap in 1usize..10, pick in any::<usize>(), seed in any::<u64>()) {
        duplicate_rejection(&stream, cap, pick, seed)?;
    }

    #[test]
    fn exact_with_room_for_every_edge(stream in edge_stream(60), mode in mode(), seed in any::<u64>()) {
        exact_when_everything_fits(&stream, mode, seed)?;
    }

    #[test]
    fn priority_aggregator_bounds(
        updates in prop::collection::vec((0u64..12, 1.0f64..20.0), 1..120),
        cap in 1usize..8,
        seed in any::<u64>(),
    ) {
        aggregator_bounds(&updates, cap, seed)?;
    }

    #[test]
    fn oracle_ignores_arrival_order(stream in edge_stream(70).prop_flat_map(|s| Just(s).prop_shuffle())) {
        oracle_order_free(&stream)?;
    }

    #[test]
    fn ranking_metrics_bounded(
        actual in prop::collection::vec(1u64..30, 2..60),
        noise in prop::collection::vec(-3.0f64..3.0, 60),
        drop in prop::collection::vec(any::<bool>(), 60),
        k in 1u32..40,
    ) {
        metrics_bounds(&actual, &noise, &drop, k)?;
    }
}

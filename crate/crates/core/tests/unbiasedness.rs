//! Monte Carlo checks that the sampling estimators are unbiased.
//!
//! Every check runs 2·10^4 seeds by default; set `SIMPROJ_MC_SEEDS` for longer runs.

mod common;

use common::*;
use simproj_core::SamplerMode;

fn check_sampler(mode: SamplerMode) {
    let stats = simulate(mode, 8, mc_seeds());
    let label = format!("{mode:?}");
    let mut failures = Vec::new();
    failures.extend(check_edge_estimator(&stats, &label).failures);
    failures.extend(check_similarity(&stats, &label).failures);
    failures.extend(check_variance(&stats, &label).failures);
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn adaptive_sampler_is_unbiased() {
    check_sampler(SamplerMode::Adaptive);
}

#[test]
fn fixed_sampler_is_unbiased() {
    check_sampler(SamplerMode::Fixed);
}

#[test]
fn unit_sampler_is_unbiased() {
    check_sampler(SamplerMode::Unit);
}

#[test]
fn sampling_actually_happens() {
    // Guards against a vacuous pass: with m = 8 of 20 every edge must be
    // missing from the sample for some seeds.
    let stats = simulate(SamplerMode::Adaptive, 8, 2000);
    for (i, s) in stats.s_hat.iter().enumerate() {
        assert!(s.variance() > 0.1, "edge {i} has variance {}", s.variance());
    }
}

#[test]
fn priority_aggregator_is_unbiased() {
    let report = check_aggregator(mc_seeds());
    assert!(report.failures.is_empty(), "{:#?}", report.failures);
}

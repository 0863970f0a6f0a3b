//! Permanent random numbers derived by hashing.
//!
//! Every sampling decision in the crate flows from a 64-bit seed mixed with the
//! identity of the item being sampled, so runs are reproducible and an item's
//! variate can be regenerated on demand instead of stored.

use crate::types::{EdgeKey, PairKey, Side};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer. Bijective with full avalanche.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Folds a sequence of words into one hash, chaining through `mix64`.
#[inline]
pub fn hash_words(seed: u64, words: &[u64]) -> u64 {
    let mut h = mix64(seed.wrapping_add(GOLDEN));
    for &w in words {
        h = mix64(h ^ w.wrapping_add(GOLDEN));
    }
    h
}

/// Maps a 64-bit hash into (0, 1]. Uses the top 53 bits so the result is exact
/// in `f64`; the `+1` excludes zero.
#[inline]
pub fn unit_interval(h: u64) -> f64 {
    ((h >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Permanent random number of a bipartite edge, uniform on (0, 1].
#[inline]
pub fn beta_of(key: EdgeKey, seed: u64) -> f64 {
    unit_interval(hash_words(seed, &[key.u, key.v]))
}

/// Random number for one residence episode of an aggregation key.
#[inline]
pub fn pair_beta(key: PairKey, seed: u64, episode: u64) -> f64 {
    let side = match key.side {
        Side::U => 0,
        Side::V => 1,
    };
    unit_interval(hash_words(seed, &[side, key.a, key.b, episode]))
}

/// Coordinated node hash shared by all sketches built with `seed`.
#[inline]
pub fn node_hash(id: u64, seed: u64) -> u64 {
    hash_words(seed ^ 0x5bd1_e995, &[id])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_is_deterministic() {
        let k = EdgeKey::new(3, 17);
        assert_eq!(beta_of(k, 42), beta_of(k, 42));
        assert_ne!(beta_of(k, 42), beta_of(k, 43));
        assert_ne!(beta_of(k, 42), beta_of(EdgeKey::new(17, 3), 42));
    }

    #[test]
    fn unit_interval_bounds() {
        assert_eq!(unit_interval(u64::MAX), 1.0);
        assert!(unit_interval(0) > 0.0);
        assert_eq!(unit_interval(0), 1.0 / (1u64 << 53) as f64);
    }

    #[test]
    fn beta_uniformity() {
        // Mean and Kolmogorov-Smirnov distance over a million distinct keys.
        let n = 1_000_000usize;
        let mut xs: Vec<f64> = (0..n as u64)
            .map(|i| beta_of(EdgeKey::new(i / 1000, i % 1000), 2024))
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((0.499..=0.501).contains(&mean), "mean {mean}");
        xs.sort_by(f64::total_cmp);
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let lo = i as f64 / n as f64;
                let hi = (i + 1) as f64 / n as f64;
                (x - lo).abs().max((hi - x).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.002, "ks {ks}");
    }
}

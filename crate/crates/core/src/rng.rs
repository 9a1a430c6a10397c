//! Seed derivation for reproducible runs.
//!
//! Every stochastic component (environment rewards, each agent, each Monte
//! Carlo trial) draws from its own ChaCha stream whose seed is derived from a
//! base seed plus fixed stream tags. Changing one component's consumption
//! pattern therefore never shifts another component's randomness, and results
//! are reproducible regardless of scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream tag for environment reward draws.
pub const STREAM_ENV: u64 = 1;
/// Stream tag for agent-owned randomness, indexed by player rank.
pub const STREAM_AGENT: u64 = 2;
/// Stream tag for game sampling.
pub const STREAM_GAME: u64 = 3;
/// Stream tag for Monte Carlo existence trials.
pub const STREAM_MC: u64 = 4;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derive a child seed from a base seed and a sequence of stream tags.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(base ^ 0xA076_1D64_78BD_642F);
    for &t in tags {
        state = splitmix64(state ^ splitmix64(t));
    }
    state
}

/// A seeded ChaCha stream for the given tags.
pub fn stream_rng(base: u64, tags: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(base, tags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let a = derive_seed(7, &[STREAM_AGENT, 1]);
        let b = derive_seed(7, &[STREAM_AGENT, 2]);
        let c = derive_seed(8, &[STREAM_AGENT, 1]);
        assert_eq!(a, derive_seed(7, &[STREAM_AGENT, 1]));
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn streams_reproduce_bit_identically() {
        let xs: Vec<f64> = stream_rng(42, &[STREAM_ENV]).random_iter().take(64).collect();
        let ys: Vec<f64> = stream_rng(42, &[STREAM_ENV]).random_iter().take(64).collect();
        assert_eq!(xs, ys);
    }
}

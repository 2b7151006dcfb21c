//! Counter-based seed derivation so every trial draws from its own stream
//! regardless of scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one seed.
pub fn hash(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(GOLDEN, |acc, &w| mix(acc.wrapping_add(GOLDEN) ^ mix(w.wrapping_add(GOLDEN))))
}

pub fn trial_seed(master: u64, source: usize, grid: usize, trial: usize) -> u64 {
    hash(&[master, source as u64, grid as u64, trial as u64])
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

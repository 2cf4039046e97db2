//! Splittable seed derivation.
//!
//! Every sampler takes an explicit seed and derives independent
//! per-particle (and per-stream) seeds from it, so particle generation can
//! be parallelized by index without a shared RNG and reruns are exactly
//! reproducible.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// SplitMix64 finalizer; full-period mixing of a 64-bit state.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `(seed, index)`.
pub fn derive(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed).wrapping_add(splitmix64(index ^ 0xa5a5_a5a5_5a5a_5a5a)))
}

/// Deterministic RNG for one (seed, index) pair.
pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, index))
}

/// Named sub-streams of an experiment seed, so the prior, the synthetic
/// noise, the true unknown and the test dictionary never share draws.
pub mod stream {
    pub const PRIOR: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const TRUE_X: u64 = 3;
    pub const DICTIONARY: u64 = 4;
    pub const HYPER: u64 = 5;
}

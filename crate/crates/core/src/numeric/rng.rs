//! Seeded random streams.
//!
//! Every stochastic step in the crate (initialization, shuffling, dropout,
//! synthetic data, k-means++ seeding, factorization init) draws from a
//! ChaCha8 stream. ChaCha8 output is specified independently of platform and
//! word size, so a given seed reproduces the same draws everywhere.
//! Independent sub-streams are derived by hashing a base seed with a list of
//! stream identifiers through SplitMix64.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the sub-stream identified by `ids` under `base`.
pub fn derive_seed(base: u64, ids: &[u64]) -> u64 {
    ids.iter().fold(splitmix64(base), |acc, &id| splitmix64(acc ^ splitmix64(id)))
}

pub fn derived_rng(base: u64, ids: &[u64]) -> SeededRng {
    seeded_rng(derive_seed(base, ids))
}

//! Seed derivation for independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used everywhere in the crate.
pub type SimRng = ChaCha8Rng;

/// One round of SplitMix64.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `(seed, tag, index)`.
pub fn derive(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(tag)).wrapping_add(index))
}

pub fn rng_from(seed: u64, tag: u64, index: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(derive(seed, tag, index))
}

/// Stream tags. Distinct tags never share a generator.
pub mod tags {
    pub const LAYOUT: u64 = 1;
    pub const DYNAMICS: u64 = 2;
    pub const INIT: u64 = 3;
    pub const EXPLORATION: u64 = 4;
    pub const SAMPLING: u64 = 5;
    pub const EPISODE: u64 = 6;
}

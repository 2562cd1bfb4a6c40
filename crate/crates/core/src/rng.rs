//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! keyed by `(master seed, stream tag, index)`, so results never depend on
//! the order in which rollouts are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream tags. Values are part of the reproducibility contract; do not renumber.
pub mod stream {
    pub const TRAIN_WORLD: u64 = 1;
    pub const TRAIN_ROLLOUT: u64 = 2;
    pub const EVAL_WORLD: u64 = 3;
    pub const EVAL_ROLLOUT: u64 = 4;
    pub const BITWORLD_TARGET: u64 = 5;
    pub const PLAY: u64 = 6;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed, a stream tag and a counter.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ tag) ^ index)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn derive_rng(master: u64, tag: u64, index: u64) -> SimRng {
    rng_from_seed(derive_seed(master, tag, index))
}

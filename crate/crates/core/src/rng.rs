//! Seed derivation for the stochastic stages.
//!
//! Every stage that draws random numbers does so from a ChaCha8 stream whose
//! seed is `derive_seed(user_seed, stage, index)`. Replicate `i` of a null
//! model therefore sees the same stream no matter which thread runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    DownSample = 1,
    NullModel = 2,
    Clustering = 3,
    Baseline = 4,
    Synth = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stage: Stage, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(stage as u64)) ^ index)
}

pub fn stage_rng(seed: u64, stage: Stage, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stage, index))
}

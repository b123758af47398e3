//! Seed derivation. Every random draw in the pipeline comes from a stream
//! keyed by (seed, tags), so a run can be resumed at any step without
//! replaying earlier draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix(seed), |acc, &t| splitmix(acc ^ splitmix(t)))
}

pub fn stream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tags))
}

/// Purpose tags for [`stream`].
pub mod tag {
    pub const REAL: u64 = 1;
    pub const LATENT: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const PENALTY: u64 = 4;
    pub const GEN_LABELS: u64 = 5;
    pub const INIT: u64 = 6;
    pub const EMBEDDING: u64 = 7;
    pub const GRID: u64 = 8;
    pub const EVAL: u64 = 9;
    pub const CENTER: u64 = 10;
}

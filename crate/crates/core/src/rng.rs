//! Deterministic seed splitting.
//!
//! Every random stream in a run is derived from one master seed and a short
//! path of integers (`derive_seed(master, &[iteration, STREAM_TAG, index])`).
//! Streams therefore do not depend on evaluation order, which keeps parallel
//! and sequential execution bit-identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream tags used by the optimizers.
pub mod stream {
    pub const PERTURBATION: u64 = 1;
    pub const PROJECTION: u64 = 2;
    pub const REPLICATION: u64 = 3;
    pub const FINAL: u64 = 4;
    pub const BASELINE: u64 = 5;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `path` into `master` with SplitMix64 finalization at every step.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(0xA5A5_A5A5))))
}

pub fn stream_rng(master: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, path))
}

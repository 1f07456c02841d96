//! Deterministic random-stream derivation.
//!
//! Every parallel task (block, trial, replication) owns a private ChaCha12
//! stream seeded from `(seed, index)` through a splitmix64-style avalanche,
//! so results are bit-identical at any thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// splitmix64 finalizer: full-avalanche 64-bit mix.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a stream index.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix(mix(seed) ^ mix(index.wrapping_add(0xa5a5_a5a5_a5a5_a5a5)))
}

/// RNG for the stream `(seed, index)`.
pub fn derive_rng(seed: u64, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(seed, index))
}

/// Fixed stream indices for the orchestrator's own draws, kept distinct from
/// block indices (which start at 0) by a high bit.
pub const STREAM_PERMUTATION: u64 = 1 << 62;
pub const STREAM_SIGN: u64 = (1 << 62) + 1;

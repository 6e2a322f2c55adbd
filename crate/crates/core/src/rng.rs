//! Reproducible random streams.
//!
//! Every random consumer receives a [`ChaCha8Rng`]. Child streams are derived
//! by keying the generator with the parent seed and selecting the ChaCha
//! stream (nonce) with a counter, so stream `k` of seed `s` is the same
//! regardless of how work is scheduled across threads.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Generator for `seed` on the default stream.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child stream `index` of `seed`.
pub fn child(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

/// Derive a sub-seed for a named stage so stages do not share streams.
pub fn stage_seed(seed: u64, stage: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ stage.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

//! Seeded random streams.
//!
//! Every random draw in the toolkit comes from a [`Pcg32`] generator: 64 bits
//! of state plus a 64-bit stream selector. A run seed fixes the state and each
//! consumer (initialization, shuffling, sampling, task generation) gets its
//! own stream id, so adding draws to one consumer never shifts another.

use rand::SeedableRng;
use rand_pcg::Pcg32;

pub use rand_pcg::Pcg32 as StreamRng;

/// Parameter initialization.
pub const STREAM_INIT: u64 = 1;
/// Per-epoch pair shuffling (the epoch index is added to this id).
pub const STREAM_SHUFFLE: u64 = 0x1000;
/// Autoregressive sampling.
pub const STREAM_SAMPLE: u64 = 0x2000;
/// Synthetic task generation.
pub const STREAM_TASKS: u64 = 0x3000;
/// Synthetic candidate manufacturing.
pub const STREAM_CANDIDATES: u64 = 0x4000;
/// Supervised demonstrations.
pub const STREAM_DEMOS: u64 = 0x5000;

/// Deterministic generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> Pcg32 {
    // Pcg32::new takes (state, increment selector); mix the seed through
    // seed_from_u64 so nearby seeds do not start on correlated states.
    let state = {
        use rand::RngCore;
        Pcg32::seed_from_u64(seed).next_u64()
    };
    Pcg32::new(state, stream)
}

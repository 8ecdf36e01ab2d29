//! Seed derivation.
//!
//! Every random draw in the crate comes from ChaCha8, a counter-based stream
//! cipher generator. A base seed selects the key and an independent stream id
//! selects the nonce, so trial `i` gets the same numbers no matter which
//! worker runs it or in what order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for substream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed for trial `index` of a run started from `base_seed`.
pub fn trial_seed(base_seed: u64, index: u64) -> u64 {
    stream_rng(base_seed, index).next_u64()
}

//! Deterministic seed derivation.
//!
//! Every source of randomness in a run is a ChaCha8 stream whose seed is
//! derived from the master seed plus a tag path, e.g.
//! `[TAG_SIMULATION, trial, generation, rollout, command_index]`. Streams are
//! therefore independent of scheduling: simulations may run on any number of
//! workers and still draw identical numbers, and a resumed run re-derives the
//! exact streams it would have used.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TAG_INIT: u64 = 1;
pub const TAG_SELECTOR: u64 = 2;
pub const TAG_SIMULATION: u64 = 3;
pub const TAG_UPDATE: u64 = 4;
pub const TAG_EVAL: u64 = 5;
pub const TAG_TRIAL: u64 = 6;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `base` and an ordered tag path.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for &tag in tags {
        state = splitmix64(state ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    }
    state
}

/// RNG stream for the given tag path under a master seed.
pub fn stream(master: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tags))
}

//! Counter-based random substreams.
//!
//! Every random decision in an experiment is drawn from a ChaCha8 stream
//! addressed by `(seed, domain, point, trial)`: the first three are hashed
//! into the 256-bit key with SplitMix64, the trial index selects the ChaCha
//! stream. Results therefore depend only on those coordinates, never on how
//! trials are scheduled across threads. Integer draws use plain rejection
//! sampling on `next_u64` so the sequence does not depend on any external
//! sampling algorithm.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator type returned by [`substream`].
pub type Stream = ChaCha8Rng;

/// Which part of an experiment a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Patterns = 1,
    Trials = 2,
    Noise = 3,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for one `(seed, domain, point, trial)` coordinate.
pub fn substream(seed: u64, domain: Domain, point: u64, trial: u64) -> Stream {
    let mut state = seed;
    let mixed = splitmix64(&mut state) ^ (domain as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93);
    let mut state = mixed ^ point.wrapping_mul(0xA076_1D64_78BD_642F);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// Uniform integer in `0..bound` (`bound > 0`).
pub fn uniform_below<R: RngCore>(rng: &mut R, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    // Largest multiple of `bound` that fits; reject above it.
    let zone = u64::MAX - (u64::MAX - bound + 1) % bound;
    loop {
        let v = rng.next_u64();
        if v <= zone {
            return v % bound;
        }
    }
}

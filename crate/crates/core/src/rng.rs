//! Counter-based, seekable random streams.
//!
//! Every stream is ChaCha8 keyed by the run seed. The 64-bit stream id is
//! the path index, so path `m` can be regenerated without touching paths
//! `0..m`. Within a path, the word position is carved into per-block
//! sub-streams for the Brownian embedding.

use crate::rational::Rational;
use num::bigint::BigInt;
use num::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Recorded in every sampled batch and report.
pub const GENERATOR: &str = "chacha8/rand_chacha-0.9 seed_from_u64, stream=path, word_pos=(block<<52)|(attempt<<44)";

const BLOCK_SHIFT: u32 = 52;
const ATTEMPT_SHIFT: u32 = 44;
/// Restart attempts addressable per block.
pub const MAX_ATTEMPTS: u64 = 1 << (BLOCK_SHIFT - ATTEMPT_SHIFT);

pub fn path_stream(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Sub-stream for one block of one path; `attempt` selects a fresh
/// sub-stream after a censored block.
pub fn block_stream(seed: u64, path: u64, block: u64, attempt: u64) -> ChaCha8Rng {
    assert!(attempt < MAX_ATTEMPTS, "attempt index out of range");
    let mut rng = path_stream(seed, path);
    rng.set_word_pos(((block as u128) << BLOCK_SHIFT) | ((attempt as u128) << ATTEMPT_SHIFT));
    rng
}

/// Uniform draw from `(0, 1)` as the exact dyadic `(2k + 1) / 2^53`, `k < 2^52`.
pub fn open_unit_dyadic<R: Rng + ?Sized>(rng: &mut R) -> Rational {
    let k = rng.random::<u64>() >> 12;
    Rational::new(BigInt::from(2 * k + 1), BigInt::one() << 53)
}

/// Float with the same construction as [`open_unit_dyadic`]; exact.
pub fn open_unit_f64<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let k = rng.random::<u64>() >> 12;
    (2 * k + 1) as f64 / (1u64 << 53) as f64
}

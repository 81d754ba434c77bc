//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by the
//! user seed and a 64-bit stream id. The id encodes what is being sampled, so
//! the draws for one purpose never depend on how many draws another purpose
//! consumed, or on which thread runs it.
//!
//! | stream | id |
//! |--------|----|
//! | inputs `x_i`, row order | `0x01` |
//! | features `w_α` (then `b_α`), column order | `0x02` |
//! | noise of trial `t`, row-major entries (or `a_i` then `b_α`) | `0x100 + t` |
//! | row/column permutation of repeat `r` | `0x1_0000_0000 + r` |
//! | trial schedule of DP anchor row `h` | `0x2_0000_0000 + h` |
//! | Monte-Carlo tuples for `f(n)` | `0x3_0000_0000 + n` |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const INPUTS: u64 = 0x01;
pub const FEATURES: u64 = 0x02;

pub fn noise(trial: usize) -> u64 {
    0x100 + trial as u64
}

pub fn permutation(repeat: usize) -> u64 {
    0x1_0000_0000 + repeat as u64
}

pub fn schedule(anchor: usize) -> u64 {
    0x2_0000_0000 + anchor as u64
}

pub fn tuples(order: usize) -> u64 {
    0x3_0000_0000 + order as u64
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer; derives independent child seeds (e.g. per replicate).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

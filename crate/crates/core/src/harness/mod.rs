//! Replicated experiments, benchmarks and reproduction tables.

pub mod bench;
pub mod reproduce;
pub mod stats;

use rayon::prelude::*;

use crate::error::Result;
use crate::rng::derive_seed;

/// Runs `f(r, seed_r)` for replicates `r = 0..count` on the rayon pool, with
/// `seed_r = derive_seed(seed, r)`. Results come back in replicate order.
pub fn run_replicates<T, F>(count: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    (0..count).into_par_iter().map(|r| f(r, derive_seed(seed, r as u64))).collect()
}

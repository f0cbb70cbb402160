//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha::ChaCha8Rng`)
//! keyed by `seed_from_u64(seed)` and then moved onto a 64-bit stream with
//! `set_stream(stream)`. ChaCha8 output is specified independently of the
//! platform, so a given `(seed, stream)` pair yields the same transcript
//! everywhere.
//!
//! Stream ids:
//! - selection round `r` uses stream `r` (the pool's round counter before the move),
//! - the initial train/val split uses [`SPLIT_STREAM`],
//! - test-video picking uses [`TEST_VIDEO_STREAM`],
//! - synthetic task generation uses [`TASK_STREAM`].
//!
//! Uniform integers are drawn with `Rng::random_range`, and sampling without
//! replacement is a partial Fisher-Yates shuffle: for `i` in `0..amount`,
//! draw `j` uniformly from `i..n` and swap positions `i` and `j`; the first
//! `amount` positions are the sample, in draw order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const SPLIT_STREAM: u64 = u64::MAX;
pub const TEST_VIDEO_STREAM: u64 = u64::MAX - 1;
pub const TASK_STREAM: u64 = u64::MAX - 2;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `amount` distinct indices from `0..n` by partial Fisher-Yates.
///
/// Panics if `amount > n`.
pub fn sample_indices<R: Rng + ?Sized>(rng: &mut R, n: usize, amount: usize) -> Vec<usize> {
    assert!(amount <= n, "cannot draw {amount} of {n}");
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..amount {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(amount);
    idx
}

/// In-place Fisher-Yates shuffle with the same draw convention as [`sample_indices`].
pub fn shuffle<T, R: Rng + ?Sized>(rng: &mut R, items: &mut [T]) {
    let n = items.len();
    for i in 0..n.saturating_sub(1) {
        let j = rng.random_range(i..n);
        items.swap(i, j);
    }
}

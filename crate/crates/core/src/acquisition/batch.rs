use rand::Rng;

use crate::error::{Error, Result};
use crate::model::FrameId;
use crate::rng::sample_indices;

/// Sizes of `n_batches` contiguous batches over `n` items; the first
/// `n % n_batches` batches hold one extra item.
pub fn batch_sizes(n: usize, n_batches: usize) -> Vec<usize> {
    let base = n / n_batches;
    let extra = n % n_batches;
    (0..n_batches).map(|i| base + usize::from(i < extra)).collect()
}

/// Frames drawn from each batch: `budget / n_batches` everywhere, plus one
/// for each of the first `budget % n_batches` (highest-ranked) batches.
pub fn batch_quotas(budget: usize, n_batches: usize) -> Vec<usize> {
    let per = budget / n_batches;
    let rem = budget % n_batches;
    (0..n_batches).map(|i| per + usize::from(i < rem)).collect()
}

/// Splits `ranked` into contiguous near-equal batches and draws each batch's
/// quota uniformly without replacement.
///
/// Draw transcript: batches are visited best-first; within batch `b` the
/// quota is drawn by partial Fisher-Yates over the batch's positions
/// ([`crate::rng::sample_indices`]). Output is grouped by batch, in draw order.
pub fn batched_random_select<R: Rng + ?Sized>(
    ranked: &[FrameId],
    budget: usize,
    n_batches: usize,
    rng: &mut R,
) -> Result<Vec<FrameId>> {
    if budget > ranked.len() {
        return Err(Error::BudgetExceedsPool {
            budget,
            pool: ranked.len(),
        });
    }
    if n_batches == 0 || n_batches > budget {
        return Err(Error::TooManyBatches { n_batches, budget });
    }
    let sizes = batch_sizes(ranked.len(), n_batches);
    let quotas = batch_quotas(budget, n_batches);

    let mut out = Vec::with_capacity(budget);
    let mut start = 0;
    for (size, quota) in sizes.into_iter().zip(quotas) {
        // size >= quota: ranked.len() >= budget implies floor(n/b) >= floor(budget/b),
        // and when they are equal the budget remainder fits in the size remainder.
        debug_assert!(size >= quota);
        let batch = &ranked[start..start + size];
        out.extend(sample_indices(rng, size, quota).into_iter().map(|i| batch[i]));
        start += size;
    }
    Ok(out)
}

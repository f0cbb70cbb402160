//! Informativeness scoring and per-round frame selection.
//!
//! Strategies:
//! - `random`: uniform sample of the new video's frames;
//! - `entropy`: mean per-pixel prediction entropy, ranked, then sampled in
//!   contiguous batches ([`batched_random_select`]);
//! - `euclidean` / `cosine`: normalized inter-distance plus normalized
//!   intra-distance ([`diversity_scores`]), ranked, top budget taken.
//!
//! Scores are "higher = more informative"; ties rank by ascending [`FrameId`].

mod batch;
mod distance;
mod entropy;

pub use batch::{batch_quotas, batch_sizes, batched_random_select};
pub use distance::{
    cosine_distance, diversity_scores, euclidean_distance, inter_distance, intra_distance, min_max_normalize, Metric,
    DEFAULT_METRIC_EPSILON,
};
pub use entropy::{frame_mean_entropy, pixel_entropy};

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{FeatureVector, FrameId, PoolState, Strategy};
use crate::rng::sample_indices;
use crate::store::ArtifactStore;

pub const DEFAULT_BUDGET: usize = 50;
pub const DEFAULT_N_BATCHES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcquisitionConfig {
    pub strategy: Strategy,
    pub budget: usize,
    pub n_batches: usize,
    pub metric_epsilon: f64,
}

impl AcquisitionConfig {
    pub fn new(strategy: Strategy) -> Self {
        AcquisitionConfig {
            strategy,
            budget: DEFAULT_BUDGET,
            n_batches: DEFAULT_N_BATCHES,
            metric_epsilon: DEFAULT_METRIC_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidConfig("budget must be positive".into()));
        }
        if self.n_batches == 0 {
            return Err(Error::InvalidConfig("n_batches must be positive".into()));
        }
        if self.strategy == Strategy::Entropy && self.budget < self.n_batches {
            return Err(Error::TooManyBatches {
                n_batches: self.n_batches,
                budget: self.budget,
            });
        }
        if self.metric_epsilon.is_nan() || self.metric_epsilon <= 0.0 {
            return Err(Error::InvalidConfig("metric_epsilon must be positive".into()));
        }
        Ok(())
    }

    /// Distance metric for the diversity strategies.
    pub fn metric(&self) -> Option<Metric> {
        match self.strategy {
            Strategy::Euclidean => Some(Metric::Euclidean),
            Strategy::Cosine => Some(Metric::Cosine {
                epsilon: self.metric_epsilon,
            }),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredFrame {
    pub id: FrameId,
    pub score: f64,
    /// `(inter_norm, intra_norm)` for the diversity strategies.
    pub components: Option<(f64, f64)>,
}

/// Sorts by score descending, ties by ascending id.
pub fn rank_frames(mut scored: Vec<ScoredFrame>) -> Vec<ScoredFrame> {
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.id.cmp(&b.id)));
    scored
}

/// Scores the unlabeled frames of `video` without selecting. Output is ranked.
///
/// The random strategy has no score and is rejected.
pub fn score_video(pool: &PoolState, video: u32, cfg: &AcquisitionConfig, store: &dyn ArtifactStore) -> Result<Vec<ScoredFrame>> {
    cfg.validate()?;
    let candidates = pool.candidates(video);
    if candidates.is_empty() {
        return Err(Error::UnknownVideo(video));
    }
    let scored = match (cfg.strategy, cfg.metric()) {
        (Strategy::Random, _) => {
            return Err(Error::InvalidArgument("the random strategy has no informativeness score".into()))
        }
        (Strategy::Entropy, _) => entropy_scores(&candidates, store)?,
        (_, Some(metric)) => {
            let cand = load_features(&candidates, store)?;
            let labeled_ids: Vec<FrameId> = pool.labeled.iter().copied().collect();
            let labeled = load_features(&labeled_ids, store)?;
            let labeled: Vec<&FeatureVector> = labeled.iter().map(|(_, f)| f).collect();
            diversity_scores(&cand, &labeled, metric)?
        }
        _ => unreachable!("diversity strategies always have a metric"),
    };
    Ok(rank_frames(scored))
}

/// Picks this round's frames from the unlabeled frames of `new_video`.
///
/// Returns `min(budget, candidates)` distinct ids. When the pool is smaller
/// than the batch count, the entropy strategy uses one batch per frame.
pub fn select_round<R: Rng + ?Sized>(
    pool: &PoolState,
    new_video: u32,
    cfg: &AcquisitionConfig,
    store: &dyn ArtifactStore,
    rng: &mut R,
) -> Result<Vec<FrameId>> {
    cfg.validate()?;
    let candidates = pool.candidates(new_video);
    if candidates.is_empty() {
        return Err(Error::UnknownVideo(new_video));
    }
    let budget = cfg.budget.min(candidates.len());
    match cfg.strategy {
        Strategy::Random => Ok(sample_indices(rng, candidates.len(), budget)
            .into_iter()
            .map(|i| candidates[i])
            .collect()),
        Strategy::Entropy => {
            let ranked: Vec<FrameId> = score_video(pool, new_video, cfg, store)?.into_iter().map(|s| s.id).collect();
            batched_random_select(&ranked, budget, cfg.n_batches.min(budget), rng)
        }
        Strategy::Euclidean | Strategy::Cosine => Ok(score_video(pool, new_video, cfg, store)?
            .into_iter()
            .take(budget)
            .map(|s| s.id)
            .collect()),
    }
}

fn entropy_scores(candidates: &[FrameId], store: &dyn ArtifactStore) -> Result<Vec<ScoredFrame>> {
    candidates
        .iter()
        .map(|&id| {
            let pm = store.probmap(id)?;
            let score = frame_mean_entropy(&pm).map_err(|e| Error::at_frame(id, e))?;
            Ok(ScoredFrame {
                id,
                score,
                components: None,
            })
        })
        .collect()
}

fn load_features(ids: &[FrameId], store: &dyn ArtifactStore) -> Result<Vec<(FrameId, FeatureVector)>> {
    let out: Vec<(FrameId, FeatureVector)> = ids
        .iter()
        .map(|&id| store.feature(id).map(|f| (id, f)))
        .collect::<Result<_>>()?;
    if let Some((first, rest)) = out.split_first() {
        let d = first.1.dim();
        if let Some((id, f)) = rest.iter().find(|(_, f)| f.dim() != d) {
            return Err(Error::at_frame(
                *id,
                Error::DimensionMismatch {
                    expected: d,
                    found: f.dim(),
                },
            ));
        }
    }
    Ok(out)
}

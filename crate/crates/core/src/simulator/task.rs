//! Synthetic segmentation videos with skewed class prevalence.
//!
//! Generation, all draws from `stream_rng(cfg.seed, TASK_STREAM)`:
//!
//! 1. Class centers: `K` points with pairwise distance `cluster_separation`
//!    (scaled standard basis when `d >= K`, otherwise random directions of
//!    norm `separation / sqrt(2)`).
//! 2. Per video and class, an appearance offset with per-coordinate standard
//!    deviation `VIDEO_SHIFT * spread / sqrt(d)`.
//! 3. Class 0 is background and fills every frame. Class `k >= 1` appears in
//!    `max(MIN_FRAMES, round(PRESENCE_TOP * PRESENCE_DECAY^(k-1) * frames))`
//!    frames of every video, laid down in runs of up to `MAX_RUN` consecutive
//!    frames, so the last classes show up in about one frame per video.
//! 4. Each present class paints one axis-aligned rectangle (sides uniform in
//!    `[H/4, H/2]` by `[W/4, W/2]`, position uniform), classes painted in
//!    ascending order so rarer classes lie on top.
//! 5. Pixel feature = class center + video offset + isotropic noise with
//!    per-coordinate deviation `spread / sqrt(d)` (expected norm about `spread`).
//!    With probability `label_noise` a pixel's feature is drawn for a
//!    different, uniformly chosen class while its label is kept.
//! 6. Frame feature = mean of its pixel features.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FeatureVector, FrameId, LabelMask};
use crate::rng::{stream_rng, StreamRng, TASK_STREAM};

pub const PRESENCE_TOP: f64 = 0.5;
pub const PRESENCE_DECAY: f64 = 0.3;
pub const MIN_FRAMES: usize = 1;
pub const MAX_RUN: usize = 4;
pub const VIDEO_SHIFT: f64 = 0.3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticTaskConfig {
    pub n_videos: usize,
    pub frames_per_video: usize,
    /// Class count K.
    pub classes: usize,
    pub height: usize,
    pub width: usize,
    /// Feature dimension d.
    pub dim: usize,
    pub cluster_spread: f64,
    pub cluster_separation: f64,
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticTaskConfig {
    fn default() -> Self {
        SyntheticTaskConfig {
            n_videos: 5,
            frames_per_video: 120,
            classes: 8,
            height: 16,
            width: 16,
            dim: 16,
            cluster_spread: 1.0,
            cluster_separation: 3.0,
            label_noise: 0.0,
            seed: 13,
        }
    }
}

impl SyntheticTaskConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_videos == 0 || self.frames_per_video == 0 {
            return bad("need at least one video and one frame per video");
        }
        if self.classes < 2 || self.classes > u16::MAX as usize {
            return bad("class count must be in [2, 65535]");
        }
        if self.dim < 2 {
            return bad("feature dimension must be at least 2");
        }
        if self.height == 0 || self.width == 0 {
            return bad("frame size must be positive");
        }
        if !(self.cluster_separation > 0.0 && self.cluster_separation.is_finite()) {
            return bad("cluster_separation must be positive");
        }
        if !(self.cluster_spread >= 0.0 && self.cluster_spread.is_finite()) {
            return bad("cluster_spread must be nonnegative");
        }
        if !(0.0..1.0).contains(&self.label_noise) {
            return bad("label_noise must be in [0, 1)");
        }
        Ok(())
    }

    /// Number of frames per video that contain class `k`.
    pub fn frames_with_class(&self, k: usize) -> usize {
        if k == 0 {
            return self.frames_per_video;
        }
        let rate = PRESENCE_TOP * PRESENCE_DECAY.powi(k as i32 - 1);
        ((rate * self.frames_per_video as f64).round() as usize)
            .max(MIN_FRAMES)
            .min(self.frames_per_video)
    }
}

/// One frame with per-pixel features (H x W x d, pixel-major) and its mask.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticFrame {
    pub id: FrameId,
    pub labels: LabelMask,
    pub pixels: Vec<f64>,
    pub feature: FeatureVector,
}

#[derive(Clone, Debug)]
pub struct SyntheticTask {
    pub cfg: SyntheticTaskConfig,
    pub centers: Vec<Vec<f64>>,
    /// Sorted by id.
    pub frames: Vec<SyntheticFrame>,
}

impl SyntheticTask {
    pub fn video_ids(&self) -> Vec<u32> {
        (0..self.cfg.n_videos as u32).collect()
    }

    pub fn video_frames(&self, video: u32) -> &[SyntheticFrame] {
        let n = self.cfg.frames_per_video;
        let start = video as usize * n;
        &self.frames[start..start + n]
    }

    pub fn frame(&self, id: FrameId) -> Option<&SyntheticFrame> {
        let n = self.cfg.frames_per_video;
        if id.video as usize >= self.cfg.n_videos || id.index as usize >= n {
            return None;
        }
        self.frames.get(id.video as usize * n + id.index as usize)
    }

    /// Total pixel count per class over the whole dataset.
    pub fn class_pixel_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.cfg.classes];
        for f in &self.frames {
            for &c in f.labels.as_slice() {
                counts[c as usize] += 1;
            }
        }
        counts
    }
}

fn normal(rng: &mut StreamRng) -> f64 {
    StandardNormal.sample(rng)
}

fn class_centers(cfg: &SyntheticTaskConfig, rng: &mut StreamRng) -> Vec<Vec<f64>> {
    let (k, d) = (cfg.classes, cfg.dim);
    let radius = cfg.cluster_separation / std::f64::consts::SQRT_2;
    if d >= k {
        return (0..k)
            .map(|c| (0..d).map(|i| if i == c { radius } else { 0.0 }).collect())
            .collect();
    }
    (0..k)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| normal(rng)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.into_iter().map(|x| x * radius / n).collect()
        })
        .collect()
}

/// Frames of one video that contain a class: `count` frames laid down in
/// runs of up to `MAX_RUN` consecutive frames at uniform starts.
fn presence_track(count: usize, frames: usize, rng: &mut StreamRng) -> Vec<bool> {
    let count = count.min(frames);
    let mut on = vec![false; frames];
    let mut placed = 0;
    while placed < count {
        let start = rng.random_range(0..frames);
        for slot in on.iter_mut().skip(start).take(MAX_RUN) {
            if placed < count && !*slot {
                *slot = true;
                placed += 1;
            }
        }
    }
    on
}

pub fn generate_task(cfg: &SyntheticTaskConfig) -> Result<SyntheticTask> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, TASK_STREAM);
    let (k, d, h, w) = (cfg.classes, cfg.dim, cfg.height, cfg.width);
    let centers = class_centers(cfg, &mut rng);
    let noise_sd = cfg.cluster_spread / (d as f64).sqrt();
    let shift_sd = VIDEO_SHIFT * noise_sd;

    let mut frames = Vec::with_capacity(cfg.n_videos * cfg.frames_per_video);
    for video in 0..cfg.n_videos as u32 {
        let means: Vec<Vec<f64>> = centers
            .iter()
            .map(|c| c.iter().map(|x| x + shift_sd * normal(&mut rng)).collect())
            .collect();
        let tracks: Vec<Vec<bool>> = (0..k)
            .map(|c| presence_track(cfg.frames_with_class(c), cfg.frames_per_video, &mut rng))
            .collect();

        for index in 0..cfg.frames_per_video {
            let mut labels = vec![0u16; h * w];
            for (c, track) in tracks.iter().enumerate().skip(1) {
                if !track[index] {
                    continue;
                }
                let rh = rng.random_range((h / 4).max(1)..=(h / 2).max(1));
                let rw = rng.random_range((w / 4).max(1)..=(w / 2).max(1));
                let y0 = rng.random_range(0..=h - rh);
                let x0 = rng.random_range(0..=w - rw);
                for y in y0..y0 + rh {
                    labels[y * w + x0..y * w + x0 + rw].fill(c as u16);
                }
            }

            let mut pixels = Vec::with_capacity(h * w * d);
            let mut mean = vec![0.0; d];
            for &label in &labels {
                let mut src = label as usize;
                if cfg.label_noise > 0.0 && rng.random::<f64>() < cfg.label_noise {
                    src = (src + rng.random_range(1..k)) % k;
                }
                for (i, m) in means[src].iter().enumerate() {
                    let x = m + noise_sd * normal(&mut rng);
                    mean[i] += x;
                    pixels.push(x);
                }
            }
            let n = (h * w) as f64;
            mean.iter_mut().for_each(|m| *m /= n);
            frames.push(SyntheticFrame {
                id: FrameId::new(video, index as u32),
                labels: LabelMask::new(h, w, labels, k)?,
                pixels,
                feature: FeatureVector::new(mean)?,
            });
        }
    }
    Ok(SyntheticTask {
        cfg: cfg.clone(),
        centers,
        frames,
    })
}

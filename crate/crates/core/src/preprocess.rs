//! Frame filtering: blur rejection, then greedy near-duplicate pruning.

use crate::error::{Error, Result};
use crate::model::{FrameRecord, PixelTensor};

/// How the deduplication threshold is chosen. Exactly one mode applies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DedupThreshold {
    /// Fixed pixel-space Euclidean distance.
    Absolute(f64),
    /// Percentile in (0, 100] of the consecutive-frame distances of each
    /// video (after blur rejection), linearly interpolated.
    Percentile(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PreprocessConfig {
    pub dedup: DedupThreshold,
    /// Frames whose [`blur_score`] falls below this are dropped.
    pub blur_threshold: f64,
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        match self.dedup {
            DedupThreshold::Absolute(t) if !(t >= 0.0 && t.is_finite()) => {
                return Err(Error::InvalidConfig(format!("dedup threshold {t} must be >= 0")))
            }
            DedupThreshold::Percentile(p) if !(p > 0.0 && p <= 100.0) => {
                return Err(Error::InvalidConfig(format!("dedup percentile {p} not in (0, 100]")))
            }
            _ => {}
        }
        if self.blur_threshold.is_nan() || self.blur_threshold < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "blur threshold {} must be >= 0",
                self.blur_threshold
            )));
        }
        Ok(())
    }
}

pub fn pixel_euclidean(a: &PixelTensor, b: &PixelTensor) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            expected: a.shape().to_vec(),
            found: b.shape().to_vec(),
        });
    }
    let ss: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(ss.sqrt())
}

/// Variance of the 3x3 Laplacian response over the luminance (channel mean).
///
/// Only interior pixels contribute, so an H x W frame yields (H-2)(W-2)
/// responses. Higher means sharper.
pub fn blur_score(frame: &PixelTensor) -> Result<f64> {
    let [c, h, w] = frame.shape();
    if h < 3 || w < 3 {
        return Err(Error::TooSmall { h, w });
    }
    let data = frame.as_slice();
    let plane = h * w;
    let luma: Vec<f64> = (0..plane)
        .map(|px| (0..c).map(|ch| data[ch * plane + px]).sum::<f64>() / c as f64)
        .collect();

    let mut responses = Vec::with_capacity((h - 2) * (w - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let at = |yy: usize, xx: usize| luma[yy * w + xx];
            responses.push(at(y - 1, x) + at(y + 1, x) + at(y, x - 1) + at(y, x + 1) - 4.0 * at(y, x));
        }
    }
    let n = responses.len() as f64;
    let mean = responses.iter().sum::<f64>() / n;
    Ok(responses.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n)
}

/// One row of the filtering audit log.
#[derive(Clone, Debug, PartialEq)]
pub struct AuditEntry {
    pub id: crate::model::FrameId,
    pub blur_score: f64,
    /// `None` for blurry frames and for the first sharp frame of a video.
    pub distance_to_last_kept: Option<f64>,
    pub kept: bool,
}

#[derive(Clone, Debug, Default)]
pub struct FilterOutcome {
    pub kept: Vec<FrameRecord>,
    pub audit: Vec<AuditEntry>,
}

/// Linear-interpolation percentile (`p` in [0, 100]) of a nonempty sample.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = (p / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (rank - lo as f64))
}

/// Drops blurry frames, then scans each video keeping a frame iff its pixel
/// distance to the last kept frame of that video reaches the threshold. The
/// first sharp frame of each video is always kept.
///
/// `frames` must be grouped by video with ascending indices inside each video;
/// `load` resolves a record's pixel tensor.
pub fn filter_frames<F>(frames: &[FrameRecord], cfg: &PreprocessConfig, mut load: F) -> Result<FilterOutcome>
where
    F: FnMut(&FrameRecord) -> Result<PixelTensor>,
{
    cfg.validate()?;
    let mut out = FilterOutcome::default();

    let mut start = 0;
    while start < frames.len() {
        let video = frames[start].id.video;
        let end = frames[start..]
            .iter()
            .position(|r| r.id.video != video)
            .map_or(frames.len(), |off| start + off);
        let group = &frames[start..end];
        if let Some(bad) = group.windows(2).find(|w| w[1].id <= w[0].id) {
            return Err(Error::Unordered { video, id: bad[1].id });
        }
        filter_video(group, cfg, &mut load, &mut out)?;
        start = end;
    }
    Ok(out)
}

fn filter_video<F>(group: &[FrameRecord], cfg: &PreprocessConfig, load: &mut F, out: &mut FilterOutcome) -> Result<()>
where
    F: FnMut(&FrameRecord) -> Result<PixelTensor>,
{
    let mut sharp = Vec::new();
    for rec in group {
        if rec.pixel_ref.is_none() {
            return Err(Error::MissingPixels(rec.id));
        }
        let pixels = load(rec)?;
        let score = blur_score(&pixels)?;
        let is_sharp = score >= cfg.blur_threshold;
        out.audit.push(AuditEntry {
            id: rec.id,
            blur_score: score,
            distance_to_last_kept: None,
            kept: false,
        });
        if is_sharp {
            sharp.push((rec, pixels, out.audit.len() - 1));
        }
    }

    let threshold = match cfg.dedup {
        DedupThreshold::Absolute(t) => t,
        DedupThreshold::Percentile(p) => {
            let consecutive = sharp
                .windows(2)
                .map(|w| pixel_euclidean(&w[0].1, &w[1].1))
                .collect::<Result<Vec<_>>>()?;
            percentile(&consecutive, p).unwrap_or(0.0)
        }
    };

    let mut last_kept: Option<&PixelTensor> = None;
    for (rec, pixels, audit_idx) in &sharp {
        let keep = match last_kept {
            None => true,
            Some(prev) => {
                let d = pixel_euclidean(prev, pixels)?;
                out.audit[*audit_idx].distance_to_last_kept = Some(d);
                d >= threshold
            }
        };
        if keep {
            out.audit[*audit_idx].kept = true;
            out.kept.push((*rec).clone());
            last_kept = Some(pixels);
        }
    }
    Ok(())
}

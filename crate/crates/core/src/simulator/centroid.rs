//! Nearest-centroid segmenter with a softmax over negative distances.

use crate::error::{Error, Result};
use crate::model::{LabelMask, ProbMap};

#[derive(Clone, Debug, PartialEq)]
pub struct CentroidModel {
    /// Per-class prototype; `None` for classes with no labeled pixel.
    pub centroids: Vec<Option<Vec<f64>>>,
    pub temperature: f64,
    pub dim: usize,
}

/// Fits per-class centroids as the mean of all labeled pixel features.
///
/// Each item pairs a mask with its pixel features (H x W x d, pixel-major).
pub fn fit_model<'a, I>(labeled: I, classes: usize, dim: usize, temperature: f64) -> Result<CentroidModel>
where
    I: IntoIterator<Item = (&'a LabelMask, &'a [f64])>,
{
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(Error::InvalidConfig(format!("temperature {temperature} must be positive")));
    }
    let mut sums = vec![vec![0.0; dim]; classes];
    let mut counts = vec![0u64; classes];
    for (mask, pixels) in labeled {
        if pixels.len() != mask.as_slice().len() * dim {
            return Err(Error::ShapeMismatch {
                expected: vec![mask.height(), mask.width(), dim],
                found: vec![pixels.len()],
            });
        }
        for (px, &c) in mask.as_slice().iter().enumerate() {
            let c = c as usize;
            if c >= classes {
                return Err(Error::ClassOutOfRange { index: px, value: c as u16, k: classes });
            }
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(&pixels[px * dim..(px + 1) * dim]) {
                *s += x;
            }
        }
    }
    if counts.iter().all(|&n| n == 0) {
        return Err(Error::NoLabeledData);
    }
    let centroids = sums
        .into_iter()
        .zip(counts)
        .map(|(s, n)| (n > 0).then(|| s.into_iter().map(|x| x / n as f64).collect()))
        .collect();
    Ok(CentroidModel {
        centroids,
        temperature,
        dim,
    })
}

impl CentroidModel {
    pub fn classes(&self) -> usize {
        self.centroids.len()
    }

    pub fn present(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.centroids
            .iter()
            .enumerate()
            .filter_map(|(c, v)| v.as_deref().map(|v| (c, v)))
    }

    /// Per-pixel `p_c ∝ exp(-|x - centroid_c| / T)` over present classes;
    /// absent classes get 0.
    pub fn predict_probmap(&self, pixels: &[f64], h: usize, w: usize) -> Result<ProbMap> {
        let present: Vec<(usize, &[f64])> = self.present().collect();
        if present.is_empty() {
            return Err(Error::NoPresentClasses);
        }
        let (k, d, plane) = (self.classes(), self.dim, h * w);
        if pixels.len() != plane * d {
            return Err(Error::ShapeMismatch {
                expected: vec![h, w, d],
                found: vec![pixels.len()],
            });
        }
        let mut probs = vec![0.0; k * plane];
        let mut dist = vec![0.0; present.len()];
        for px in 0..plane {
            let x = &pixels[px * d..(px + 1) * d];
            for (slot, (_, c)) in dist.iter_mut().zip(&present) {
                *slot = x.iter().zip(*c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            }
            // shift by the nearest distance so the largest weight is exp(0) = 1
            let nearest = dist.iter().copied().fold(f64::INFINITY, f64::min);
            let mut total = 0.0;
            for (slot, (c, _)) in dist.iter().zip(&present) {
                let wgt = (-(slot - nearest) / self.temperature).exp();
                probs[c * plane + px] = wgt;
                total += wgt;
            }
            for (c, _) in &present {
                probs[c * plane + px] /= total;
            }
        }
        Ok(ProbMap::from_parts_unchecked(k, h, w, probs))
    }

    /// Argmax segmentation (ties to the lowest class index).
    pub fn predict_labels(&self, pixels: &[f64], h: usize, w: usize) -> Result<LabelMask> {
        Ok(self.predict_probmap(pixels, h, w)?.argmax())
    }
}

use crate::error::{Error, Result};
use crate::model::{ProbMap, PROB_SUM_TOL};

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn pixel_entropy(p: &[f64]) -> Result<f64> {
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL || p.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::NotNormalized { y: 0, x: 0, sum });
    }
    Ok(entropy_unchecked(p))
}

fn entropy_unchecked(p: &[f64]) -> f64 {
    let h: f64 = p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum();
    // rounding can leave a one-hot pixel at -0.0 or a hair below zero
    h.max(0.0)
}

/// Mean of [`pixel_entropy`] over all H x W pixels.
pub fn frame_mean_entropy(pm: &ProbMap) -> Result<f64> {
    let (h, w) = (pm.height(), pm.width());
    let mut buf = Vec::with_capacity(pm.classes());
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            pm.pixel_into(y, x, &mut buf);
            let sum: f64 = buf.iter().sum();
            if (sum - 1.0).abs() > PROB_SUM_TOL {
                return Err(Error::NotNormalized { y, x, sum });
            }
            total += entropy_unchecked(&buf);
        }
    }
    Ok(total / (h * w) as f64)
}

//! Intersection over union.

use crate::error::{Error, Result};
use crate::model::LabelMask;

/// Pixel counts for one class, accumulated over any number of frames.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IouCounts {
    pub intersection: u64,
    pub union: u64,
}

impl IouCounts {
    /// `None` when the union is empty.
    pub fn iou(self) -> Option<f64> {
        (self.union > 0).then(|| self.intersection as f64 / self.union as f64)
    }
}

fn check_shapes(pred: &LabelMask, gt: &LabelMask) -> Result<()> {
    if pred.shape() != gt.shape() {
        return Err(Error::ShapeMismatch {
            expected: gt.shape().to_vec(),
            found: pred.shape().to_vec(),
        });
    }
    Ok(())
}

/// IoU of class `k`; `None` when neither mask contains it.
pub fn compute_iou(pred: &LabelMask, gt: &LabelMask, k: u16) -> Result<Option<f64>> {
    check_shapes(pred, gt)?;
    let mut c = IouCounts::default();
    for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
        let (pk, gk) = (p == k, g == k);
        c.intersection += u64::from(pk && gk);
        c.union += u64::from(pk || gk);
    }
    Ok(c.iou())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MiouReport {
    /// Mean over classes with a non-empty accumulated union.
    pub miou: Option<f64>,
    /// `None` marks a class excluded from the mean.
    pub per_class: Vec<Option<f64>>,
}

/// Accumulates intersections and unions per class over all frames, then
/// divides; the mean skips classes whose union stays empty.
pub fn compute_miou(preds: &[LabelMask], gts: &[LabelMask], classes: usize) -> Result<MiouReport> {
    if preds.len() != gts.len() {
        return Err(Error::LengthMismatch(preds.len(), gts.len()));
    }
    let mut counts = vec![IouCounts::default(); classes];
    for (p, g) in preds.iter().zip(gts) {
        check_shapes(p, g)?;
        for (&pc, &gc) in p.as_slice().iter().zip(g.as_slice()) {
            for (c, class) in [pc, gc].into_iter().enumerate() {
                if class as usize >= classes {
                    return Err(Error::ClassOutOfRange { index: c, value: class, k: classes });
                }
            }
            if pc == gc {
                counts[pc as usize].intersection += 1;
                counts[pc as usize].union += 1;
            } else {
                counts[pc as usize].union += 1;
                counts[gc as usize].union += 1;
            }
        }
    }
    let per_class: Vec<Option<f64>> = counts.iter().map(|c| c.iou()).collect();
    let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
    let miou = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(MiouReport { miou, per_class })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(v: &[u16], k: usize) -> LabelMask {
        LabelMask::new(1, v.len(), v.to_vec(), k).unwrap()
    }

    #[test]
    fn iou_examples() {
        let a = m(&[0, 1, 1, 0], 2);
        assert_eq!(compute_iou(&a, &a, 1).unwrap(), Some(1.0));
        assert_eq!(compute_iou(&m(&[1, 0], 2), &m(&[0, 1], 2), 1).unwrap(), Some(0.0));
        // pred {0,1}, gt {1,2}: 1 / (2 + 2 - 1)
        assert_eq!(
            compute_iou(&m(&[1, 1, 0, 0], 2), &m(&[0, 1, 1, 0], 2), 1).unwrap(),
            Some(1.0 / 3.0)
        );
        assert_eq!(compute_iou(&a, &a, 5).unwrap(), None);
        assert!(compute_iou(&a, &m(&[0, 1], 2), 1).is_err());
    }

    #[test]
    fn miou_examples() {
        let gt = vec![m(&[0, 1, 1, 0], 2)];
        assert_eq!(compute_miou(&gt, &gt, 2).unwrap().miou, Some(1.0));
        let flipped = vec![m(&[1, 0, 0, 1], 2)];
        assert_eq!(compute_miou(&flipped, &gt, 2).unwrap().miou, Some(0.0));
        let r = compute_miou(&gt, &gt, 3).unwrap();
        assert_eq!(r.per_class, vec![Some(1.0), Some(1.0), None]);
        assert!(matches!(compute_miou(&gt, &[], 2), Err(Error::LengthMismatch(1, 0))));
    }

    #[test]
    fn accumulated_not_averaged() {
        // frame A: class 1 pred {0}, gt {0,1} -> 1/2 ; frame B: pred {0,1,2,3}, gt {0} -> 1/4
        // accumulated: (1 + 1) / (2 + 4) = 1/3, not the per-frame mean 3/8
        let preds = vec![m(&[1, 0, 0, 0], 2), m(&[1, 1, 1, 1], 2)];
        let gts = vec![m(&[1, 1, 0, 0], 2), m(&[1, 0, 0, 0], 2)];
        let r = compute_miou(&preds, &gts, 2).unwrap();
        assert_eq!(r.per_class[1], Some(1.0 / 3.0));
    }
}

//! Feature-space distances and the inter/intra diversity score.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::FrameId;

use super::ScoredFrame;

/// Default guard below which a vector counts as zero for cosine distance.
pub const DEFAULT_METRIC_EPSILON: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Metric {
    Euclidean,
    /// `1 - cos(q, r)`, in [0, 2]; vectors with norm <= `epsilon` are rejected.
    Cosine { epsilon: f64 },
}

impl Metric {
    pub fn distance(self, q: &[f64], r: &[f64]) -> Result<f64> {
        match self {
            Metric::Euclidean => euclidean_distance(q, r),
            Metric::Cosine { epsilon } => cosine_distance(q, r, epsilon),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine { .. } => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine { epsilon: DEFAULT_METRIC_EPSILON }),
            _ => Err(format!("unknown metric `{s}`")),
        }
    }
}

fn check_dims(q: &[f64], r: &[f64]) -> Result<()> {
    if q.len() != r.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            found: r.len(),
        });
    }
    Ok(())
}

pub fn euclidean_distance(q: &[f64], r: &[f64]) -> Result<f64> {
    check_dims(q, r)?;
    Ok(q.iter().zip(r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// `1 - q.r / (|q| |r|)`; larger means more dissimilar.
pub fn cosine_distance(q: &[f64], r: &[f64], epsilon: f64) -> Result<f64> {
    check_dims(q, r)?;
    let (mut dot, mut qq, mut rr) = (0.0, 0.0, 0.0);
    for (a, b) in q.iter().zip(r) {
        dot += a * b;
        qq += a * a;
        rr += b * b;
    }
    let (nq, nr) = (qq.sqrt(), rr.sqrt());
    if nq <= epsilon || nr <= epsilon {
        return Err(Error::ZeroVector);
    }
    let cos = (dot / (nq * nr)).clamp(-1.0, 1.0);
    Ok(1.0 - cos)
}

/// Mean distance from `q` to every reference vector.
pub fn inter_distance<R: AsRef<[f64]>>(q: &[f64], labeled: &[R], metric: Metric) -> Result<f64> {
    if labeled.is_empty() {
        return Err(Error::EmptyReferenceSet);
    }
    let mut total = 0.0;
    for r in labeled {
        total += metric.distance(q, r.as_ref())?;
    }
    Ok(total / labeled.len() as f64)
}

/// Mean distance from frame `q_id` to the other candidates of its video;
/// 0 when it is the only candidate.
pub fn intra_distance<R: AsRef<[f64]>>(q_id: FrameId, candidates: &[(FrameId, R)], metric: Metric) -> Result<f64> {
    let q = candidates
        .iter()
        .find(|(id, _)| *id == q_id)
        .map(|(_, f)| f.as_ref())
        .ok_or(Error::QueryNotInCandidates(q_id))?;
    let mut total = 0.0;
    let mut n = 0usize;
    for (id, f) in candidates {
        if *id != q_id {
            total += metric.distance(q, f.as_ref())?;
            n += 1;
        }
    }
    Ok(if n == 0 { 0.0 } else { total / n as f64 })
}

/// `(s - min) / (max - min)`; a constant list maps to all zeros.
pub fn min_max_normalize(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("scores to normalize"));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range == 0.0 {
        return Ok(vec![0.0; scores.len()]);
    }
    Ok(scores.iter().map(|s| ((s - min) / range).clamp(0.0, 1.0)).collect())
}

/// Scores each candidate by normalized inter-distance (to the labeled set)
/// plus normalized intra-distance (to the other candidates).
///
/// Both terms are computed in a single pass over the full candidate set and
/// min-max normalized across it.
pub fn diversity_scores<C, R>(candidates: &[(FrameId, C)], labeled: &[R], metric: Metric) -> Result<Vec<ScoredFrame>>
where
    C: AsRef<[f64]> + Sync,
    R: AsRef<[f64]> + Sync,
{
    if labeled.is_empty() {
        return Err(Error::EmptyReferenceSet);
    }
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let n = candidates.len();

    let inter = candidates
        .par_iter()
        .map(|(id, f)| inter_distance(f.as_ref(), labeled, metric).map_err(|e| Error::at_frame(*id, e)))
        .collect::<Result<Vec<f64>>>()?;

    // upper triangle of the candidate distance matrix, row by row
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    metric
                        .distance(candidates[i].1.as_ref(), candidates[j].1.as_ref())
                        .map_err(|e| Error::at_frame(candidates[i].0, e))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut row_sums = vec![0.0; n];
    for (i, row) in rows.iter().enumerate() {
        for (off, d) in row.iter().enumerate() {
            row_sums[i] += d;
            row_sums[i + 1 + off] += d;
        }
    }
    let intra: Vec<f64> = if n == 1 {
        vec![0.0]
    } else {
        row_sums.iter().map(|s| s / (n - 1) as f64).collect()
    };

    let inter_norm = min_max_normalize(&inter)?;
    let intra_norm = min_max_normalize(&intra)?;
    Ok(candidates
        .iter()
        .zip(inter_norm.into_iter().zip(intra_norm))
        .map(|((id, _), (a, b))| ScoredFrame {
            id: *id,
            score: a + b,
            components: Some((a, b)),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const COS: Metric = Metric::Cosine { epsilon: DEFAULT_METRIC_EPSILON };

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(euclidean_distance(&[1.0, 2.0, 3.0], &[4.0, 6.0, 3.0]).unwrap(), (9.0f64 + 16.0).sqrt());
        assert!(matches!(euclidean_distance(&[1.0], &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn cosine_examples() {
        let e = 1e-12;
        assert!(cosine_distance(&[1.0, 2.0], &[3.0, 6.0], e).unwrap().abs() < 1e-15);
        assert!((cosine_distance(&[1.0, 0.0], &[0.0, 5.0], e).unwrap() - 1.0).abs() < 1e-15);
        assert!((cosine_distance(&[1.0, 1.0], &[-2.0, -2.0], e).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(cosine_distance(&[0.0, 0.0], &[1.0, 0.0], e), Err(Error::ZeroVector)));
    }

    #[test]
    fn inter_examples() {
        let q = [1.0, 2.0];
        assert_eq!(inter_distance(&q, &[q], Metric::Euclidean).unwrap(), 0.0);
        assert!(inter_distance(&q, &[q], COS).unwrap().abs() < 1e-15);
        assert_eq!(
            inter_distance(&[0.0, 0.0], &[[3.0, 4.0], [0.0, 0.0]], Metric::Euclidean).unwrap(),
            2.5
        );
        assert!((inter_distance(&[1.0, 0.0], &[[0.0, 1.0], [-1.0, 0.0]], COS).unwrap() - 1.5).abs() < 1e-15);
        let empty: [[f64; 2]; 0] = [];
        assert!(matches!(inter_distance(&q, &empty, Metric::Euclidean), Err(Error::EmptyReferenceSet)));
    }

    #[test]
    fn intra_examples() {
        let a = FrameId::new(1, 0);
        let b = FrameId::new(1, 1);
        let c = FrameId::new(1, 2);
        assert_eq!(intra_distance(a, &[(a, [1.0, 1.0])], Metric::Euclidean).unwrap(), 0.0);
        assert_eq!(intra_distance(a, &[(a, [1.0, 1.0]), (b, [1.0, 1.0])], Metric::Euclidean).unwrap(), 0.0);
        let cands = [(a, [0.0, 0.0]), (b, [3.0, 4.0]), (c, [6.0, 8.0])];
        assert_eq!(intra_distance(a, &cands, Metric::Euclidean).unwrap(), 7.5);
        assert!(matches!(
            intra_distance(FrameId::new(2, 0), &cands, Metric::Euclidean),
            Err(Error::QueryNotInCandidates(_))
        ));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(min_max_normalize(&[2.0, 4.0, 6.0]).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(min_max_normalize(&[7.0, 7.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(min_max_normalize(&[3.0]).unwrap(), vec![0.0]);
        assert!(min_max_normalize(&[]).is_err());
    }

    #[test]
    fn diversity_examples() {
        let labeled = [[0.0, 0.0]];
        let one = diversity_scores(&[(FrameId::new(1, 0), [1.0, 1.0])], &labeled, Metric::Euclidean).unwrap();
        assert_eq!(one[0].score, 0.0);

        let cands = [
            (FrameId::new(1, 0), [10.0, 0.0]),
            (FrameId::new(1, 1), [1.0, 0.0]),
        ];
        let s = diversity_scores(&cands, &labeled, Metric::Euclidean).unwrap();
        // intra distances are equal for two candidates, so only inter separates them
        assert_eq!((s[0].score, s[1].score), (1.0, 0.0));
    }

    #[test]
    fn diversity_dominating_pair_hits_endpoints() {
        // A dominates B on both raw distances.
        let labeled = [[0.0, 0.0]];
        let cands = [
            (FrameId::new(1, 0), [10.0, 0.0]),
            (FrameId::new(1, 1), [1.0, 0.0]),
            (FrameId::new(1, 2), [2.0, 0.0]),
        ];
        let s = diversity_scores(&cands, &labeled, Metric::Euclidean).unwrap();
        // raw intra: A (9+8)/2=8.5, B (9+1)/2=5, C (8+1)/2=4.5 ; inter: 10, 1, 2
        assert_eq!(s[0].score, 2.0);
        assert_eq!(s[0].components, Some((1.0, 1.0)));
        let b = s[1].components.unwrap();
        assert_eq!(b.0, 0.0);
        assert!((b.1 - 0.5 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn four_candidates_hand_computed() {
        // labeled {(0,0)}, candidates on the x axis at 1, 2, 4, 8
        // inter = 1, 2, 4, 8 -> norm 0, 1/7, 3/7, 1
        // intra: x=1: (1+3+7)/3=11/3; x=2: (1+2+6)/3=3; x=4: (3+2+4)/3=3; x=8: (7+6+4)/3=17/3
        //   -> norm (11/3-3)/(17/3-3) = (2/3)/(8/3) = 1/4, 0, 0, 1
        let labeled = [[0.0, 0.0]];
        let cands: Vec<_> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .enumerate()
            .map(|(i, &x)| (FrameId::new(2, i as u32), [x, 0.0]))
            .collect();
        let s = diversity_scores(&cands, &labeled, Metric::Euclidean).unwrap();
        let expect = [0.25, 1.0 / 7.0, 3.0 / 7.0, 2.0];
        for (got, want) in s.iter().zip(expect) {
            assert!((got.score - want).abs() < 1e-12, "{} vs {}", got.score, want);
        }
    }

    #[test]
    fn diversity_names_offending_frame() {
        let labeled = [[1.0, 0.0]];
        let cands = [(FrameId::new(3, 4), [0.0, 0.0])];
        match diversity_scores(&cands, &labeled, COS) {
            Err(Error::AtFrame { id, source }) => {
                assert_eq!(id, FrameId::new(3, 4));
                assert!(matches!(*source, Error::ZeroVector));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    fn vec3() -> impl proptest::strategy::Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, 3)
    }

    proptest! {
        #[test]
        fn euclidean_is_a_metric(a in vec3(), b in vec3(), c in vec3()) {
            let d = |x: &[f64], y: &[f64]| euclidean_distance(x, y).unwrap();
            prop_assert_eq!(d(&a, &a), 0.0);
            prop_assert_eq!(d(&a, &b), d(&b, &a));
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
        }

        #[test]
        fn cosine_scale_invariant(a in vec3(), b in vec3(), s in 0.1f64..50.0, t in 0.1f64..50.0) {
            prop_assume!(a.iter().any(|v| v.abs() > 1e-3) && b.iter().any(|v| v.abs() > 1e-3));
            let sa: Vec<f64> = a.iter().map(|v| v * s).collect();
            let tb: Vec<f64> = b.iter().map(|v| v * t).collect();
            let d0 = cosine_distance(&a, &b, 1e-12).unwrap();
            prop_assert!((d0 - cosine_distance(&sa, &tb, 1e-12).unwrap()).abs() < 1e-9);
            prop_assert!((d0 - cosine_distance(&b, &a, 1e-12).unwrap()).abs() < 1e-15);
            prop_assert!((0.0..=2.0).contains(&d0));
        }

        #[test]
        fn normalize_idempotent(v in proptest::collection::vec(-100.0f64..100.0, 2..40)) {
            let once = min_max_normalize(&v).unwrap();
            let twice = min_max_normalize(&once).unwrap();
            let nondegenerate = v.iter().any(|x| *x != v[0]);
            if nondegenerate {
                for (a, b) in once.iter().zip(&twice) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }
            prop_assert!(once.iter().all(|x| (0.0..=1.0).contains(x)));
        }

        #[test]
        fn inter_is_order_invariant(q in vec3(), refs in proptest::collection::vec(vec3(), 1..10), rot in 0usize..10) {
            let mut r2 = refs.clone();
            r2.rotate_left(rot % refs.len());
            let a = inter_distance(&q, &refs, Metric::Euclidean).unwrap();
            let b = inter_distance(&q, &r2, Metric::Euclidean).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }
}

//! Shared domain types and pool-state transitions.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Deref;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng;

/// Identity of one video frame.
///
/// The derived ordering is lexicographic on `(video, index)` and is the
/// tie-breaker wherever scores are equal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrameId {
    pub video: u32,
    pub index: u32,
}

impl FrameId {
    pub const fn new(video: u32, index: u32) -> Self {
        FrameId { video, index }
    }
}

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.video, self.index)
    }
}

impl FromStr for FrameId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (v, i) = s
            .split_once(':')
            .ok_or_else(|| format!("frame id `{s}` is not of the form video:index"))?;
        let video = v.trim().parse().map_err(|e| format!("bad video in `{s}`: {e}"))?;
        let index = i.trim().parse().map_err(|e| format!("bad index in `{s}`: {e}"))?;
        Ok(FrameId { video, index })
    }
}

impl Serialize for FrameId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FrameId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A d-dimensional deep feature of one frame. Entries are finite and d >= 1.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("feature vector"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(FeatureVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Tolerance on the per-pixel probability sum.
pub const PROB_SUM_TOL: f64 = 1e-6;

/// Per-pixel class probabilities, stored K x H x W row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbMap {
    k: usize,
    h: usize,
    w: usize,
    probs: Vec<f64>,
}

impl ProbMap {
    pub fn new(k: usize, h: usize, w: usize, probs: Vec<f64>) -> Result<Self> {
        let pm = ProbMap { k, h, w, probs };
        pm.validate()?;
        Ok(pm)
    }

    /// Skips the per-pixel checks. The caller guarantees the invariants.
    pub(crate) fn from_parts_unchecked(k: usize, h: usize, w: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), k * h * w);
        ProbMap { k, h, w, probs }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.h == 0 || self.w == 0 {
            return Err(Error::EmptyInput("probability map"));
        }
        if self.probs.len() != self.k * self.h * self.w {
            return Err(Error::ShapeMismatch {
                expected: vec![self.k, self.h, self.w],
                found: vec![self.probs.len()],
            });
        }
        if let Some((index, &value)) = self
            .probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::ProbabilityOutOfRange { index, value });
        }
        let plane = self.h * self.w;
        for px in 0..plane {
            let sum: f64 = (0..self.k).map(|c| self.probs[c * plane + px]).sum();
            if (sum - 1.0).abs() > PROB_SUM_TOL {
                return Err(Error::NotNormalized {
                    y: px / self.w,
                    x: px % self.w,
                    sum,
                });
            }
        }
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.k
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Copies the K probabilities of pixel `(y, x)` into `out`.
    pub fn pixel_into(&self, y: usize, x: usize, out: &mut Vec<f64>) {
        let plane = self.h * self.w;
        let px = y * self.w + x;
        out.clear();
        out.extend((0..self.k).map(|c| self.probs[c * plane + px]));
    }

    /// Per-pixel argmax; ties go to the lowest class index.
    pub fn argmax(&self) -> LabelMask {
        let plane = self.h * self.w;
        let classes = (0..plane)
            .map(|px| {
                let mut best = 0;
                for c in 1..self.k {
                    if self.probs[c * plane + px] > self.probs[best * plane + px] {
                        best = c;
                    }
                }
                best as u16
            })
            .collect();
        LabelMask {
            h: self.h,
            w: self.w,
            classes,
        }
    }
}

/// Ground-truth or predicted class index per pixel, H x W row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMask {
    h: usize,
    w: usize,
    classes: Vec<u16>,
}

impl LabelMask {
    pub fn new(h: usize, w: usize, classes: Vec<u16>, k: usize) -> Result<Self> {
        if classes.len() != h * w {
            return Err(Error::ShapeMismatch {
                expected: vec![h, w],
                found: vec![classes.len()],
            });
        }
        if let Some((index, &value)) = classes
            .iter()
            .enumerate()
            .find(|(_, &c)| c as usize >= k)
        {
            return Err(Error::ClassOutOfRange { index, value, k });
        }
        Ok(LabelMask { h, w, classes })
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.h, self.w]
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.classes
    }
}

/// Raw pixels, C x H x W row-major, values in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct PixelTensor {
    c: usize,
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl PixelTensor {
    pub fn new(c: usize, h: usize, w: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != c * h * w {
            return Err(Error::ShapeMismatch {
                expected: vec![c, h, w],
                found: vec![data.len()],
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(PixelTensor { c, h, w, data })
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.c, self.h, self.w]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Where a frame sits at the start of an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Pool,
    Labeled,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Pool => "pool",
            Split::Labeled => "labeled",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "pool" => Ok(Split::Pool),
            "labeled" => Ok(Split::Labeled),
            "test" => Ok(Split::Test),
            other => Err(other.to_string()),
        }
    }
}

/// One manifest row: a frame and the storage keys of its tensors.
///
/// Keys are paths as written in the manifest, relative to the manifest's directory
/// unless absolute.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameRecord {
    pub id: FrameId,
    pub feature_ref: PathBuf,
    pub probmap_ref: Option<PathBuf>,
    pub label_ref: Option<PathBuf>,
    pub pixel_ref: Option<PathBuf>,
    pub split: Split,
}

/// Acquisition strategies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Random,
    Entropy,
    Euclidean,
    Cosine,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Random,
        Strategy::Entropy,
        Strategy::Euclidean,
        Strategy::Cosine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Entropy => "entropy",
            Strategy::Euclidean => "euclidean",
            Strategy::Cosine => "cosine",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}` (expected random, entropy, euclidean or cosine)"))
    }
}

/// What produced a round log: a selection strategy, or the all-data anchor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    Select(Strategy),
    AllData,
}

impl Arm {
    pub fn name(self) -> &'static str {
        match self {
            Arm::Select(s) => s.name(),
            Arm::AllData => "all",
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "all" {
            Ok(Arm::AllData)
        } else {
            s.parse().map(Arm::Select)
        }
    }
}

impl From<Strategy> for Arm {
    fn from(s: Strategy) -> Self {
        Arm::Select(s)
    }
}

/// Record of one selection round (or of an evaluation without selection).
#[derive(Clone, Debug, PartialEq)]
pub struct RoundLog {
    pub strategy: Arm,
    pub seed: u64,
    pub round: u64,
    pub n_labeled: usize,
    pub selected: Vec<FrameId>,
    /// `None` when no class had a non-empty union (or no evaluation ran).
    pub miou: Option<f64>,
    /// One entry per class; `None` marks a class excluded from the mean.
    pub per_class_iou: Vec<Option<f64>>,
}

/// Partition of a dataset's frames into labeled, unlabeled and test sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolState {
    pub labeled: BTreeSet<FrameId>,
    pub unlabeled: BTreeSet<FrameId>,
    pub test: BTreeSet<FrameId>,
    pub round: u64,
    pub seed: u64,
}

impl PoolState {
    /// Builds the round-0 state from manifest split tags.
    pub fn from_records(records: &[FrameRecord], seed: u64) -> Self {
        let mut state = PoolState {
            labeled: BTreeSet::new(),
            unlabeled: BTreeSet::new(),
            test: BTreeSet::new(),
            round: 0,
            seed,
        };
        for r in records {
            match r.split {
                Split::Pool => state.unlabeled.insert(r.id),
                Split::Labeled => state.labeled.insert(r.id),
                Split::Test => state.test.insert(r.id),
            };
        }
        state
    }

    /// Moves `selected` from the unlabeled pool to the labeled set and
    /// advances the round counter.
    pub fn apply_selection(&self, selected: &[FrameId]) -> Result<PoolState> {
        let mut seen = BTreeSet::new();
        for &id in selected {
            if !seen.insert(id) {
                return Err(Error::DuplicateSelection(id));
            }
            if !self.unlabeled.contains(&id) {
                return Err(Error::SelectionNotInPool(id));
            }
        }
        let mut next = self.clone();
        for id in selected {
            next.unlabeled.remove(id);
            next.labeled.insert(*id);
        }
        next.round += 1;
        Ok(next)
    }

    /// Checks that the three sets are pairwise disjoint and cover exactly `all`.
    pub fn is_partition_of(&self, all: &BTreeSet<FrameId>) -> bool {
        let total = self.labeled.len() + self.unlabeled.len() + self.test.len();
        total == all.len()
            && self
                .labeled
                .iter()
                .chain(&self.unlabeled)
                .chain(&self.test)
                .all(|id| all.contains(id))
    }

    /// Unlabeled frames of one video, ascending.
    pub fn candidates(&self, video: u32) -> Vec<FrameId> {
        self.unlabeled
            .range(FrameId::new(video, 0)..=FrameId::new(video, u32::MAX))
            .copied()
            .collect()
    }

    /// Lowest video id that still has unlabeled frames.
    pub fn next_video(&self) -> Option<u32> {
        self.unlabeled.first().map(|id| id.video)
    }
}

/// Splits one video's frames into train and validation sets.
///
/// `|train| = round(train_fraction * N)`. The partition depends only on the
/// set of ids and the seed: ids are sorted, then shuffled with the split stream.
pub fn initial_split(
    video_frames: &[FrameId],
    train_fraction: f64,
    seed: u64,
) -> Result<(BTreeSet<FrameId>, BTreeSet<FrameId>)> {
    if video_frames.is_empty() {
        return Err(Error::EmptyInput("initial split frames"));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} is not in (0, 1)"
        )));
    }
    let mut ids = video_frames.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let n_train = ((train_fraction * ids.len() as f64).round() as usize).min(ids.len());
    rng::shuffle(&mut rng::stream_rng(seed, rng::SPLIT_STREAM), &mut ids);
    let val = ids.split_off(n_train);
    Ok((ids.into_iter().collect(), val.into_iter().collect()))
}

/// Picks the held-out test video uniformly from `videos` using the seed.
pub fn pick_test_video(videos: &[u32], seed: u64) -> Option<u32> {
    let mut v = videos.to_vec();
    v.sort_unstable();
    v.dedup();
    if v.is_empty() {
        return None;
    }
    let i = rng::sample_indices(&mut rng::stream_rng(seed, rng::TEST_VIDEO_STREAM), v.len(), 1)[0];
    Some(v[i])
}

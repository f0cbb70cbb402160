use std::path::PathBuf;

use thiserror::Error;

use crate::model::FrameId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug)]
pub enum Error {
    // pool state
    #[error("frame {0} is not in the unlabeled pool")]
    SelectionNotInPool(FrameId),
    #[error("frame {0} selected more than once")]
    DuplicateSelection(FrameId),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    // domain value validation
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("probabilities at pixel (y={y}, x={x}) sum to {sum}, expected 1")]
    NotNormalized { y: usize, x: usize, sum: f64 },
    #[error("probability {value} at position {index} is outside [0, 1]")]
    ProbabilityOutOfRange { index: usize, value: f64 },
    #[error("class index {value} at position {index} is not below K = {k}")]
    ClassOutOfRange { index: usize, value: u16, k: usize },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("dimension mismatch: {expected} vs {found}")]
    DimensionMismatch { expected: usize, found: usize },

    // preprocessing
    #[error("frame is {h}x{w}; blur scoring needs at least 3x3")]
    TooSmall { h: usize, w: usize },
    #[error("frame {0} has no pixel tensor")]
    MissingPixels(FrameId),
    #[error("frames of video {video} are not in ascending index order at {id}")]
    Unordered { video: u32, id: FrameId },

    // acquisition
    #[error("vector norm is below epsilon; cosine distance is undefined")]
    ZeroVector,
    #[error("reference set is empty")]
    EmptyReferenceSet,
    #[error("query frame {0} is not among the candidates")]
    QueryNotInCandidates(FrameId),
    #[error("budget {budget} exceeds pool size {pool}")]
    BudgetExceedsPool { budget: usize, pool: usize },
    #[error("{n_batches} batches requested for a budget of {budget}")]
    TooManyBatches { n_batches: usize, budget: usize },
    #[error("frame {0} has no probability map")]
    MissingProbMap(FrameId),
    #[error("frame {0} has no feature vector")]
    MissingFeature(FrameId),
    #[error("frame {0} has no label mask")]
    MissingLabel(FrameId),
    #[error("video {0} has no frames in the unlabeled pool")]
    UnknownVideo(u32),
    #[error("while scoring frame {id}: {source}")]
    AtFrame {
        id: FrameId,
        #[source]
        source: Box<Error>,
    },

    // simulator
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no labeled pixels to fit on")]
    NoLabeledData,
    #[error("model has no present classes")]
    NoPresentClasses,
    #[error("length mismatch: {0} predictions vs {1} ground truths")]
    LengthMismatch(usize, usize),
    #[error("{rounds} rounds need at least {needed} videos, task has {available}")]
    InsufficientVideos {
        rounds: usize,
        needed: usize,
        available: usize,
    },

    // tensor files
    #[error("bad magic {found:?}, expected \"TNSR\"")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported TNSR version {0}")]
    VersionUnsupported(u16),
    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),
    #[error("rank {0} exceeds the maximum of 4")]
    BadRank(u8),
    #[error("{field}: expected {expected} bytes, found {found}")]
    TensorLength {
        field: &'static str,
        expected: u64,
        found: u64,
    },
    #[error("dims {0:?} exceed the element cap")]
    TooLarge(Vec<u32>),

    // csv / text formats
    #[error("line {line}: missing column `{column}`")]
    MissingColumn { line: u64, column: String },
    #[error("line {line}: duplicate frame id {id}")]
    DuplicateFrameId { line: u64, id: FrameId },
    #[error("line {line}: bad split tag `{tag}`")]
    BadSplitTag { line: u64, tag: String },
    #[error("line {line}: referenced file {path} does not exist")]
    UnresolvedPath { line: u64, path: PathBuf },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_frame(id: FrameId, source: Error) -> Self {
        Error::AtFrame {
            id,
            source: Box::new(source),
        }
    }

    /// True for failures of the underlying filesystem rather than of the data.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Csv(e) => e.is_io_error(),
            Error::AtFrame { source, .. } => source.is_io(),
            _ => false,
        }
    }
}

//! Active-learning frame selection for video segmentation datasets.
//!
//! - [`preprocess`]: blur filtering and near-duplicate removal;
//! - [`acquisition`]: entropy and feature-distance scoring, per-round selection;
//! - [`simulator`]: synthetic task, centroid model, mIoU and experiment loop;
//! - [`io`]: TNSR tensors, manifests, pool state and round logs;
//! - [`report`]: markdown comparison tables.

pub mod acquisition;
pub mod error;
pub mod io;
pub mod model;
pub mod preprocess;
pub mod report;
pub mod rng;
pub mod simulator;
pub mod store;

pub use acquisition::{select_round, AcquisitionConfig, Metric, ScoredFrame};
pub use error::{Error, Result};
pub use model::{
    Arm, FeatureVector, FrameId, FrameRecord, LabelMask, PixelTensor, PoolState, ProbMap, RoundLog, Split, Strategy,
};
pub use store::{ArtifactStore, FileStore, MemoryStore};

//! Synthetic active-learning simulator: task generation, a nearest-centroid
//! segmenter, IoU evaluation and the experiment loop.

pub mod centroid;
pub mod experiment;
pub mod metrics;
pub mod task;

pub use centroid::{fit_model, CentroidModel};
pub use experiment::{evaluate, plan_videos, run_anchor, run_cell, run_experiment, ExperimentConfig, VideoPlan};
pub use metrics::{compute_iou, compute_miou, IouCounts, MiouReport};
pub use task::{generate_task, SyntheticFrame, SyntheticTask, SyntheticTaskConfig};

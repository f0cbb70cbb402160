pub mod preprocess;
pub mod report;
pub mod score;
pub mod select;
pub mod simulate;

use std::path::Path;

use alframe_core::io::manifest::{load_manifest, Manifest};
use alframe_core::io::state::load_state;
use alframe_core::PoolState;

use crate::error::{CliError, CliResult};

pub fn manifest(path: &Path) -> CliResult<Manifest> {
    Ok(load_manifest(path)?)
}

/// Loads the pool state, or builds the round-0 state from the manifest's
/// split tags when the file does not exist yet. The state must partition the
/// manifest's frames.
pub fn pool_state(path: Option<&Path>, manifest: &Manifest, seed: u64) -> CliResult<PoolState> {
    let state = match path {
        Some(p) if p.exists() => load_state(p)?,
        _ => PoolState::from_records(&manifest.records, seed),
    };
    let all = manifest.records.iter().map(|r| r.id).collect();
    if !state.is_partition_of(&all) {
        return Err(CliError::Invalid(
            "pool state does not match the manifest's frames".into(),
        ));
    }
    Ok(state)
}

/// Lowest video that has unlabeled frames and no labeled ones; failing that,
/// the lowest video with unlabeled frames.
pub fn default_video(state: &PoolState) -> CliResult<u32> {
    let labeled_videos: std::collections::BTreeSet<u32> = state.labeled.iter().map(|id| id.video).collect();
    state
        .unlabeled
        .iter()
        .map(|id| id.video)
        .find(|v| !labeled_videos.contains(v))
        .or_else(|| state.next_video())
        .ok_or_else(|| CliError::Invalid("the unlabeled pool is empty".into()))
}

use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use alframe_core::io::roundlog::{load_round_logs, render_round_logs};
use alframe_core::io::state::render_state;
use alframe_core::rng::stream_rng;
use alframe_core::{select_round, AcquisitionConfig, Arm, FileStore, RoundLog, Strategy};

use crate::error::{CliError, CliResult};
use crate::txn::Outputs;

#[derive(clap::Args, Debug)]
pub struct Args {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Pool state JSON; created from the manifest's split tags if missing.
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long)]
    pub strategy: Strategy,
    #[arg(long, default_value_t = 50)]
    pub budget: usize,
    #[arg(long, default_value_t = 5)]
    pub n_batches: usize,
    #[arg(long)]
    pub seed: u64,
    /// Video to draw from; defaults to the lowest video with no labeled frames yet.
    #[arg(long)]
    pub video: Option<u32>,
    /// Selected ids, one `video:index` per line.
    #[arg(long)]
    pub output: PathBuf,
    /// Round-log CSV the new record is appended to.
    #[arg(long)]
    pub log: PathBuf,
}

/// Advisory lock held for the lifetime of the value.
struct StateLock(PathBuf);

impl StateLock {
    fn acquire(state: &Path) -> CliResult<Self> {
        let mut name = state.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".lock");
        let path = state.with_file_name(name);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(StateLock(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::io(
                &path,
                std::io::Error::new(e.kind(), "state is locked by another process"),
            )),
            Err(e) => Err(CliError::io(&path, e)),
        }
    }
}

impl Drop for StateLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

pub fn run(args: Args) -> CliResult<()> {
    let cfg = AcquisitionConfig {
        strategy: args.strategy,
        budget: args.budget,
        n_batches: args.n_batches,
        ..AcquisitionConfig::new(args.strategy)
    };
    cfg.validate()?;

    let manifest = super::manifest(&args.manifest)?;
    let k = manifest.dims.k.unwrap_or(0);
    let _lock = StateLock::acquire(&args.state)?;
    let state = super::pool_state(Some(&args.state), &manifest, args.seed)?;
    let video = match args.video {
        Some(v) => v,
        None => super::default_video(&state)?,
    };

    let mut logs = if args.log.exists() {
        let (log_k, logs) = load_round_logs(&args.log)?;
        if log_k != k {
            return Err(CliError::Invalid(format!(
                "{} has {log_k} class columns, the manifest has K = {k}",
                args.log.display()
            )));
        }
        logs
    } else {
        Vec::new()
    };

    let store = FileStore::new(&manifest.base_dir, &manifest.records);
    let mut rng = stream_rng(args.seed, state.round);
    let selected = select_round(&state, video, &cfg, &store, &mut rng)?;
    let mut next = state.apply_selection(&selected)?;
    next.seed = args.seed;

    logs.push(RoundLog {
        strategy: Arm::Select(args.strategy),
        seed: args.seed,
        round: next.round,
        n_labeled: next.labeled.len(),
        selected: selected.clone(),
        miou: None,
        per_class_iou: vec![None; k],
    });

    let mut ids = String::new();
    for id in &selected {
        let _ = writeln!(ids, "{id}");
    }
    let mut out = Outputs::default();
    out.add(&args.output, ids.into_bytes());
    out.add(&args.log, render_round_logs(&logs, k)?);
    out.add(&args.state, render_state(&next)?.into_bytes());
    out.commit()?;
    eprintln!(
        "round {} -> {}: selected {} frames from video {video}",
        state.round,
        next.round,
        selected.len()
    );
    Ok(())
}

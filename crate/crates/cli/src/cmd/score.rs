use std::fmt::Write as _;
use std::path::PathBuf;

use alframe_core::acquisition::score_video;
use alframe_core::io::fmt_f64;
use alframe_core::{AcquisitionConfig, FileStore, Strategy};

use crate::error::{CliError, CliResult};
use crate::txn::Outputs;

#[derive(clap::Args, Debug)]
pub struct Args {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Pool state; the manifest's split tags are used when absent.
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long)]
    pub strategy: Strategy,
    /// Video to score; defaults to the lowest video with no labeled frames yet.
    #[arg(long)]
    pub video: Option<u32>,
    /// CSV: video,index,strategy,score,inter_norm,intra_norm
    #[arg(long)]
    pub output: PathBuf,
}

pub fn run(args: Args) -> CliResult<()> {
    if args.strategy == Strategy::Random {
        return Err(CliError::Invalid("--strategy random has no score; use select".into()));
    }
    let cfg = AcquisitionConfig::new(args.strategy);
    let manifest = super::manifest(&args.manifest)?;
    let state = super::pool_state(args.state.as_deref(), &manifest, 0)?;
    let video = match args.video {
        Some(v) => v,
        None => super::default_video(&state)?,
    };
    let store = FileStore::new(&manifest.base_dir, &manifest.records);
    let scored = score_video(&state, video, &cfg, &store)?;

    let mut s = String::from("video,index,strategy,score,inter_norm,intra_norm\n");
    for f in &scored {
        let (inter, intra) = match f.components {
            Some((a, b)) => (fmt_f64(a), fmt_f64(b)),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(s, "{},{},{},{},{inter},{intra}", f.id.video, f.id.index, args.strategy, fmt_f64(f.score));
    }
    let mut out = Outputs::default();
    out.add(&args.output, s.into_bytes());
    out.commit()?;
    eprintln!("scored {} frames of video {video}", scored.len());
    Ok(())
}

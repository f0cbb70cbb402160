use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use alframe_core::io::fmt_f64;
use alframe_core::io::manifest::render_manifest;
use alframe_core::preprocess::{filter_frames, AuditEntry, DedupThreshold, PreprocessConfig};
use alframe_core::store::FileStore;
use alframe_core::FrameRecord;

use crate::error::{CliError, CliResult};
use crate::txn::Outputs;

#[derive(clap::Args, Debug)]
#[command(group(clap::ArgGroup::new("dedup").required(true).args(["dedup_threshold", "dedup_percentile"])))]
pub struct Args {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Filtered manifest.
    #[arg(long)]
    pub output: PathBuf,
    /// Audit CSV: video,index,blur_score,distance_to_last_kept,kept
    #[arg(long)]
    pub audit: PathBuf,
    /// Fixed pixel-space distance below which a frame counts as a duplicate.
    #[arg(long)]
    pub dedup_threshold: Option<f64>,
    /// Derive the threshold per video from this percentile of consecutive distances.
    #[arg(long)]
    pub dedup_percentile: Option<f64>,
    /// Minimum variance of the Laplacian response.
    #[arg(long, default_value_t = 0.0)]
    pub blur_threshold: f64,
}

pub fn run(args: Args) -> CliResult<()> {
    let dedup = match (args.dedup_threshold, args.dedup_percentile) {
        (Some(t), None) => DedupThreshold::Absolute(t),
        (None, Some(p)) => DedupThreshold::Percentile(p),
        _ => unreachable!("clap enforces exactly one dedup flag"),
    };
    let cfg = PreprocessConfig { dedup, blur_threshold: args.blur_threshold };
    cfg.validate()?;

    let manifest = super::manifest(&args.manifest)?;
    let store = FileStore::new(&manifest.base_dir, &manifest.records);
    let outcome = filter_frames(&manifest.records, &cfg, |r| store.pixels(r.id))?;

    let kept = rebase(outcome.kept, &manifest.base_dir, &args.output)?;
    let mut out = Outputs::default();
    out.add(&args.output, render_manifest(&kept)?);
    out.add(&args.audit, render_audit(&outcome.audit).into_bytes());
    out.commit()?;
    eprintln!(
        "kept {} of {} frames",
        kept.len(),
        manifest.records.len()
    );
    Ok(())
}

/// Relative tensor paths stay valid only if the new manifest sits in the
/// same directory; otherwise they are made absolute.
fn rebase(records: Vec<FrameRecord>, base: &Path, output: &Path) -> CliResult<Vec<FrameRecord>> {
    let canon = |p: &Path| {
        let p = if p.as_os_str().is_empty() { Path::new(".") } else { p };
        p.canonicalize().map_err(|e| CliError::io(p, e))
    };
    let out_dir = output.parent().unwrap_or(Path::new(""));
    let base = canon(base)?;
    if canon(out_dir)? == base {
        return Ok(records);
    }
    let fix = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
    Ok(records
        .into_iter()
        .map(|r| FrameRecord {
            feature_ref: fix(r.feature_ref),
            probmap_ref: r.probmap_ref.map(fix),
            label_ref: r.label_ref.map(fix),
            pixel_ref: r.pixel_ref.map(fix),
            ..r
        })
        .collect())
}

fn render_audit(audit: &[AuditEntry]) -> String {
    let mut s = String::from("video,index,blur_score,distance_to_last_kept,kept\n");
    for a in audit {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            a.id.video,
            a.id.index,
            fmt_f64(a.blur_score),
            a.distance_to_last_kept.map(fmt_f64).unwrap_or_default(),
            a.kept
        );
    }
    s
}

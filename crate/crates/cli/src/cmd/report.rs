use std::path::PathBuf;

use alframe_core::io::roundlog::load_round_logs;
use alframe_core::report::render_report;

use crate::error::{CliError, CliResult};
use crate::txn::Outputs;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Round-log or curves CSV files; all must share the class count.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Classes for the per-class table; all classes when omitted.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<usize>>,
    /// Column names for `--classes`, in the same order.
    #[arg(long, value_delimiter = ',')]
    pub names: Option<Vec<String>>,
    /// Markdown output file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run(args: Args) -> CliResult<()> {
    let mut k = None;
    let mut logs = Vec::new();
    for path in &args.inputs {
        let (this_k, mut these) = load_round_logs(path)?;
        match k {
            Some(prev) if prev != this_k => {
                return Err(CliError::Invalid(format!(
                    "{} has {this_k} classes, earlier inputs have {prev}",
                    path.display()
                )))
            }
            _ => k = Some(this_k),
        }
        logs.append(&mut these);
    }
    let k = k.unwrap_or(0);
    let classes = args.classes.unwrap_or_else(|| (0..k).collect());
    if let Some(names) = &args.names {
        if names.len() != classes.len() {
            return Err(CliError::Invalid(format!(
                "--names has {} entries for {} classes",
                names.len(),
                classes.len()
            )));
        }
    }
    let text = render_report(&logs, k, &classes, args.names.as_deref())?;
    match args.output {
        Some(path) => {
            let mut out = Outputs::default();
            out.add(path, text.into_bytes());
            out.commit()?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

use std::path::PathBuf;

use alframe_core::io::roundlog::render_curves;
use alframe_core::report::summarize;
use alframe_core::simulator::{generate_task, run_experiment, ExperimentConfig, SyntheticTaskConfig};
use alframe_core::Arm;
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::txn::Outputs;

/// TOML layout: optional `[task]` and `[experiment]` tables. Missing keys
/// take their defaults; unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub task: SyntheticTaskConfig,
    pub experiment: ExperimentConfig,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `experiment.rounds`.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Curves CSV: strategy,seed,round,n_labeled,miou,iou_class_0,...
    #[arg(long)]
    pub output: PathBuf,
}

pub fn load_config(path: Option<&std::path::Path>) -> CliResult<SimulateConfig> {
    let Some(path) = path else {
        return Ok(SimulateConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        source: Box::new(e),
    })
}

pub fn run(args: Args) -> CliResult<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(r) = args.rounds {
        cfg.experiment.rounds = r;
    }
    cfg.experiment.validate()?;
    let task = generate_task(&cfg.task)?;
    let logs = run_experiment(&task, &cfg.experiment)?;

    let mut out = Outputs::default();
    out.add(&args.output, render_curves(&logs, cfg.task.classes)?);
    out.commit()?;

    let last = cfg.experiment.rounds as u64;
    for g in summarize(&logs).iter().filter(|g| g.round == last) {
        let label = match g.arm {
            Arm::AllData => "all data".to_string(),
            Arm::Select(s) => s.to_string(),
        };
        match (g.miou_mean, g.miou_std) {
            (Some(m), Some(sd)) => println!(
                "{label:<10} final mIoU {m:.4} ± {sd:.4} over {} seeds, {:.0} labeled",
                g.miou_n, g.n_labeled
            ),
            _ => println!("{label:<10} final mIoU undefined"),
        }
    }
    Ok(())
}

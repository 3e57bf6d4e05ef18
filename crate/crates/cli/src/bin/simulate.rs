use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use risbackcom_cli::{run_experiment, CliError, ExperimentKind, ExperimentSpec};

/// Environment variable holding the number of worker threads.
const WORKERS_ENV: &str = "RISBACKCOM_WORKERS";

/// Run RIS-assisted NOMA backscatter Monte Carlo experiments.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// TOML scenario/experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Experiment preset: fig4, fig5, fig6 or custom. Falls back to experiment.kind.
    #[arg(long, value_parser = parse_kind)]
    kind: Option<ExperimentKind>,
    /// Master seed. Falls back to experiment.seed, then 1.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per point. Falls back to experiment.trials, then the preset default.
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    ExperimentKind::parse(s).ok_or_else(|| format!("unknown kind `{s}` (expected fig4, fig5, fig6 or custom)"))
}

fn workers() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{WORKERS_ENV}: expected a positive integer, got `{v}`"))),
        },
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = workers().and_then(|workers| {
        run_experiment(&ExperimentSpec {
            config_path: args.config,
            kind: args.kind,
            seed: args.seed,
            n_trials: args.trials,
            out_dir: args.out,
            workers,
        })
    });
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("simulate: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

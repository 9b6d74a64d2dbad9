use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use npsd_cli::config::{from_overrides, parse_config};
use npsd_cli::{execute, CliError, Command, Format, HypothesisSel, Overrides};

/// Simulate and analyse distributed sequential detection over a MAC.
#[derive(Debug, Parser)]
#[command(name = "npsd", version)]
struct Args {
    /// command to run; may also be set in the config's [run] table
    command: Option<Command>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_enum)]
    hypothesis: Option<HypothesisSel>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// output file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn run(args: Args) -> Result<(), CliError> {
    let ov = Overrides {
        command: args.command,
        preset: args.preset,
        hypothesis: args.hypothesis,
        trials: args.trials,
        seed: args.seed,
        workers: args.workers,
        out: args.out,
        format: args.format,
    };
    let cfg = match &args.config {
        Some(path) => parse_config(path, &ov)?,
        None => from_overrides(&ov)?,
    };
    let (bytes, meta) = execute(&cfg)?;
    for w in &meta.warnings {
        eprintln!("warning: {w}");
    }
    match &cfg.output_path {
        Some(path) => std::fs::write(path, &bytes).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => std::io::stdout().write_all(&bytes).map_err(|e| CliError::Io {
            path: "<stdout>".into(),
            message: e.to_string(),
        }),
    }
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! `fracperim`: runs one experiment described by a JSON config.
//!
//! Exit codes: 0 success, 2 invalid config or i/o failure, 3 numerical failure
//! (divergent tail, unreachable volume target, failed internal check).

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::ExperimentConfig;
use run::RunOptions;

#[derive(Debug, Parser)]
#[command(name = "fracperim", version, about = "Fractional perimeter experiments from a JSON config")]
struct Args {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving the report and the CSV/binary outputs.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Verify the cut/energy identity on sampled labelings.
    #[arg(long)]
    debug_checks: bool,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn validation(message: String) -> Self {
        CliError { code: 2, message }
    }

    pub fn io(message: String) -> Self {
        CliError { code: 2, message }
    }
}

impl From<fracperim::Error> for CliError {
    fn from(e: fracperim::Error) -> Self {
        use fracperim::Error::*;
        let code = match e {
            NonIntegrableTail | UnreachableVolume { .. } | Numerical(_) => 3,
            _ => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

fn main_inner(args: &Args) -> Result<PathBuf, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::io(format!("reading `{}`: {e}", args.config.display())))?;
    let cfg = ExperimentConfig::from_json(&text)?.resolve()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build_global()
        .map_err(|e| CliError::validation(format!("invalid `--threads`: {e}")))?;
    run::run(&cfg, &RunOptions { out: args.out.clone(), debug_checks: args.debug_checks })
}

fn main() -> ExitCode {
    let args = Args::parse();
    match main_inner(&args) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use ccst_cli::{run, CliError, Experiment, ExperimentConfig};
use clap::error::ErrorKind;
use clap::Parser;

/// Couple-stress finite-element experiments.
///
/// Exit status: 0 on success, 1 for configuration errors, 2 when the solver
/// or output stage fails. `CCST_THREADS` caps the worker thread count.
#[derive(Debug, Parser)]
#[command(name = "ccst", version)]
struct Args {
    /// cantilever-rigidity | mms-static | eigen-evolve | energy-drift | pulse
    experiment: String,
    /// TOML file laid over the experiment defaults
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: out/<experiment>)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn threads_from_env() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("CCST_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("CCST_THREADS = `{raw}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let result = threads_from_env().and_then(|()| {
        let experiment: Experiment = args.experiment.parse()?;
        let cfg = ExperimentConfig::from_file(experiment, &args.config)?;
        let out = args.out.unwrap_or_else(|| PathBuf::from("out").join(experiment.name()));
        let lines = run(&cfg, &out)?;
        for l in lines {
            println!("{l}");
        }
        println!("artifacts written to {}", out.display());
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ccst: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Experiment driver for the couple-stress solver: configuration, the five
//! verification experiments and their CSV/VTK/SVG artifacts.

pub mod config;
pub mod experiments;
pub mod output;
pub mod plot;

use std::path::Path;

use ccst_core::CoreError;
use thiserror::Error;

pub use config::{Experiment, ExperimentConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(#[from] CoreError),
    #[error("output error: {0}")]
    Io(String),
}

impl CliError {
    /// Process exit status: 1 for configuration problems, 2 for everything
    /// that fails after the config was accepted.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solver(_) | CliError::Io(_) => 2,
        }
    }
}

/// Resolved-config echo written next to every run's outputs.
pub const CONFIG_ECHO: &str = "config.resolved.toml";

/// Runs `cfg.experiment`, writing all artifacts into `out`. Returns the summary lines.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<String>, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    std::fs::write(out.join(CONFIG_ECHO), cfg.to_toml()).map_err(|e| CliError::Io(e.to_string()))?;
    let svg = cfg.output.svg;
    let vtk_dir = (cfg.output.vtk_stride > 0).then_some(out);
    let lines = match cfg.experiment {
        Experiment::CantileverRigidity => output::rigidity(out, &experiments::cantilever_rigidity(cfg)?, svg)?,
        Experiment::MmsStatic => output::mms(out, &experiments::mms(cfg)?, svg)?,
        Experiment::EigenEvolve => output::eigen(out, &experiments::eigen_evolve(cfg, vtk_dir)?, svg)?,
        Experiment::EnergyDrift => output::drift(out, &experiments::energy_drift(cfg)?, svg)?,
        Experiment::Pulse => output::pulse(out, &experiments::pulse(cfg, vtk_dir)?, svg)?,
    };
    let mut text = lines.join("\n");
    text.push('\n');
    std::fs::write(out.join("summary.txt"), text).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(lines)
}

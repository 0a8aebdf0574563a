//! Experiment harness for `heatpath`: TOML configuration, the eight
//! experiments and their CSV reports.

pub mod config;
pub mod experiments;
pub mod report;

use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, ManifoldConfig};
pub use experiments::{list_experiments, run_experiment, Check, Outcome, EXPERIMENTS};

/// Result of one run: the CSV written and the checks evaluated.
#[derive(Debug)]
pub struct RunSummary {
    pub csv: PathBuf,
    pub checks: Vec<Check>,
}

impl RunSummary {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Runs the configured experiment and writes `<out>/<experiment>.csv`.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<RunSummary> {
    let outcome = run_experiment(cfg)?;
    let csv = outcome.table.write(out)?;
    Ok(RunSummary {
        csv,
        checks: outcome.checks,
    })
}

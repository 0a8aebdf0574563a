use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use heatpath_cli::{list_experiments, run, ExperimentConfig, EXPERIMENTS};

/// Run heat-kernel path-integral experiments and write CSV reports.
#[derive(Debug, Parser)]
#[command(name = "heatpath", version)]
struct Args {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment name; overrides the configuration.
    #[arg(long)]
    experiment: Option<String>,
    /// Output directory for CSV reports.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// List the experiments and exit.
    #[arg(long)]
    list: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list {
        print!("{}", list_experiments());
        return ExitCode::SUCCESS;
    }
    let mut cfg = match &args.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
        },
        None => ExperimentConfig::default(),
    };
    if let Some(name) = args.experiment {
        cfg.experiment = name;
    }
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if !EXPERIMENTS.iter().any(|e| e.0 == cfg.experiment) {
        if cfg.experiment.is_empty() {
            eprintln!("error: no experiment given");
        } else {
            eprintln!("error: unknown experiment `{}`", cfg.experiment);
        }
        eprintln!("usage: heatpath [--config <path>] [--experiment <name>] [--out <dir>] [--seed <u64>] [--list]\n");
        eprint!("experiments:\n{}", list_experiments());
        return ExitCode::from(2);
    }
    let out = args.out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("results"));
    match run(&cfg, &out) {
        Ok(summary) => {
            for c in &summary.checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("wrote {}", summary.csv.display());
            if summary.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

//! `lad`: turn labeled anomaly-detection datasets into concept-sequential
//! benchmark scenarios, run one-class detectors through the sequential
//! protocol, and summarize lifelong metrics.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lad_cli::commands::{self, SynthArgs};

#[derive(Parser)]
#[command(name = "lad", version, about = "Lifelong anomaly-detection benchmarking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a synthetic blob dataset as CSV.
    Synth {
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Number of generating components.
        #[arg(long, default_value_t = 3)]
        concepts: usize,
        /// Normal rows per component.
        #[arg(long, default_value_t = 200)]
        normals: usize,
        /// Anomalous rows per component.
        #[arg(long, default_value_t = 20)]
        anomalies: usize,
        /// Minimum distance between component means.
        #[arg(long, default_value_t = 10.0)]
        separation: f64,
        /// Feature dimensionality.
        #[arg(long, default_value_t = 2)]
        dims: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build a scenario file from a dataset (per the run config).
    Generate {
        /// Run configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Scenario output path; defaults to <output_dir>/scenario.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one (scenario, detector, strategy) triple.
    Run {
        /// Run configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Scenario file produced by `generate`.
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory; defaults to the config's output_dir.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Summarize metrics files into a table and heatmap data.
    Report {
        /// Metrics files or directories to scan.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output directory for report.csv, report.txt, heatmap.csv.
        #[arg(long, default_value = "report")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth { out, concepts, normals, anomalies, separation, dims, seed } => {
            commands::synth(&SynthArgs { out, concepts, normals, anomalies, separation, dims, seed })
        }
        Command::Generate { config, out } => commands::generate(&config, out.as_deref()),
        Command::Run { config, scenario, out_dir } => {
            commands::run(&config, &scenario, out_dir.as_deref())
        }
        Command::Report { inputs, out_dir } => commands::assemble_report(&inputs, &out_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            // One machine-parseable line on stderr.
            let line = serde_json::json!({
                "error": error_kind(&error),
                "message": format!("{error:#}"),
            });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}

fn error_kind(error: &anyhow::Error) -> &'static str {
    if error.downcast_ref::<lad_cli::csv_io::LoadError>().is_some() {
        "load"
    } else if error.downcast_ref::<lad_core::dataset::DataError>().is_some() {
        "data"
    } else if error.downcast_ref::<lad_core::generation::GenerationError>().is_some() {
        "generation"
    } else if error.downcast_ref::<lad_core::scenario::ScenarioError>().is_some() {
        "scenario"
    } else if error.downcast_ref::<lad_core::detect::DetectorError>().is_some() {
        "detector"
    } else if error.downcast_ref::<lad_core::strategy::StrategyError>().is_some() {
        "strategy"
    } else if error.downcast_ref::<lad_core::eval::EvalError>().is_some() {
        "evaluation"
    } else if error.downcast_ref::<std::io::Error>().is_some() {
        "io"
    } else if error.downcast_ref::<serde_json::Error>().is_some() {
        "parse"
    } else {
        "cli"
    }
}

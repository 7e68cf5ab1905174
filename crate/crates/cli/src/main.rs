//! `gazekit`: one binary for the whole pipeline. Generate synthetic
//! recordings, validate them, measure angular object sizes, dump fixations,
//! run context-window experiments, and re-render result tables.
//!
//! Exit codes: 0 success, 1 validation or domain error, 2 usage error,
//! 3 transport exhaustion against a live endpoint.

mod commands;
mod config;
mod meta;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gazekit_core::experiments::ExperimentError;
use gazekit_core::vlm::VlmError;

use config::UsageError;

#[derive(Parser)]
#[command(name = "gazekit", version, about = "Egocentric gaze analytics toolkit")]
struct Cli {
    /// Config file (`key = value` under [synth]/[detector]/[gaze]/[spaces]/
    /// [client]/[experiment] sections); flags override file values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for parallel stages (0 = one per CPU).
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic recording plus a ground-truth sidecar.
    Synth(SynthArgs),
    /// Check a recording file; prints `ok` or one line per violation.
    Validate { file: PathBuf },
    /// Angular size distributions per interaction space.
    Sizes(SizesArgs),
    /// Detect fixations and dump them as CSV.
    Fixations {
        file: PathBuf,
        /// Output file (default: stdout).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Sample trials and sweep gaze-context size k across agent and
    /// baseline arms.
    Experiment(ExperimentArgs),
    /// Re-render results.csv and curves.svg from a results.json.
    Report(ReportArgs),
    /// Run the built-in oracle checks.
    Selftest,
}

#[derive(Args)]
struct SynthArgs {
    /// Recording output path; truth and meta sidecars are written next
    /// to it.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "N")]
    n_objects: Option<usize>,
    #[arg(long, value_name = "N")]
    n_fixations: Option<usize>,
    /// Std dev of gaze jitter during fixations, in degrees.
    #[arg(long, value_name = "DEG")]
    jitter_deg: Option<f64>,
    /// Fraction of fixations followed by a hand-object interaction.
    #[arg(long, value_name = "FRAC")]
    interaction_fraction: Option<f64>,
}

#[derive(Args)]
struct SizesArgs {
    /// Recording files.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
    format: String,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Which question the agent answers each trial.
    #[arg(value_parser = ["e1", "e2"])]
    question: String,
    /// Input recordings.
    #[arg(short = 'i', long = "inputs", required = true, num_args = 1.., value_name = "FILE")]
    inputs: Vec<PathBuf>,
    /// Directory for results.csv, results.json, curves.svg, meta.json.
    #[arg(short = 'o', long = "out-dir", value_name = "DIR")]
    out_dir: PathBuf,
    /// Agent arm: "mock:echo-prev", "mock:random", or "live".
    #[arg(long, value_name = "SPEC")]
    client: Option<String>,
    /// Comma list of baseline strategies, or "none" (default: all).
    #[arg(long, value_name = "LIST")]
    baselines: Option<String>,
    /// Trials to sample (E1; E2 uses every eligible trial).
    #[arg(long, value_name = "N")]
    n_trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Context sizes: inclusive range "0..10", comma list, or one value.
    #[arg(long, value_name = "SPEC")]
    k: Option<String>,
    /// Mock clients only: probability of an unparseable response.
    #[arg(long, value_name = "RATE")]
    garbage_rate: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// A results.json produced by `experiment`.
    results: PathBuf,
    /// Output directory (default: the directory containing the input).
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(experiment) = cause.downcast_ref::<ExperimentError>() {
            if matches!(experiment, ExperimentError::AllTransportFailed { .. }) {
                return 3;
            }
        }
        if let Some(vlm) = cause.downcast_ref::<VlmError>() {
            if matches!(vlm, VlmError::Transport { .. }) {
                return 3;
            }
        }
    }
    1
}

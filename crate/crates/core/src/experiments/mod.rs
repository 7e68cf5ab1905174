//! Gaze-context experiment harness.
//!
//! Builds trials from recordings and their scanpaths, sweeps the amount of
//! gaze history k handed to an agent, scores answers against synthetic
//! ground truth, and emits result tables with bootstrap confidence
//! intervals.

mod bootstrap;
mod emit;
mod sweep;
mod trials;

pub use bootstrap::bootstrap_ci;
pub use emit::{
    emit_results, render_curves_svg, render_results_csv, render_results_json, CURVES_SVG,
    RESULTS_CSV, RESULTS_JSON,
};
pub use sweep::{
    run_sweep, Arm, ResultRow, ResultTable, RowStatus, SweepConfig, SweepMetadata, TrialRecord,
    TrialStatus,
};
pub use trials::{
    sample_e1_trials, sample_e2_trials, TrialSpec, E2_HORIZON_NS, MIN_PRIOR_FIXATIONS,
};

use thiserror::Error;

use crate::gaze::Scanpath;
use crate::scene::Recording;
use crate::vlm::VlmError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid trial: {reason}")]
    InvalidTrial { reason: String },
    #[error("invalid sweep config: {reason}")]
    InvalidConfig { reason: String },
    #[error(transparent)]
    Vlm(#[from] VlmError),
    #[error("no outcomes to bootstrap")]
    EmptyOutcomes,
    #[error("outcome at index {index} is not finite")]
    NonFiniteOutcome { index: usize },
    #[error("confidence level must be strictly between 0 and 1, got {level}")]
    BadLevel { level: f64 },
    #[error("bootstrap needs at least one resample")]
    BadResamples,
    #[error("every trial failed transport for strategy {strategy} at k={k}")]
    AllTransportFailed { strategy: String, k: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One recording together with its detected-and-assigned scanpath.
#[derive(Debug, Clone)]
pub struct ExperimentInput {
    pub recording: Recording,
    pub scanpath: Scanpath,
}

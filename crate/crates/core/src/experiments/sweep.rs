//! The k-sweep runner. Every (strategy, k, trial) cell gets a
//! pre-assigned seed derived from the sweep seed, the strategy name, k,
//! and the trial index, so results do not depend on worker count or
//! scheduling order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bootstrap_ci, ExperimentError, ExperimentInput, TrialSpec};
use crate::rng::{mix_seed, stable_hash};
use crate::vlm::{
    baseline_answer, label_card_ref, BaselineStrategy, PriorFixation, QueryPayload, VlmClient,
    VlmError, MAX_K, TEMPLATE_VERSION,
};

/// One competitor in the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    /// The configured agent client.
    Vlm,
    Baseline(BaselineStrategy),
}

impl Arm {
    pub fn name(&self) -> String {
        match self {
            Arm::Vlm => "vlm".into(),
            Arm::Baseline(s) => s.as_str().into(),
        }
    }

    fn needs_prior_context(&self) -> bool {
        match self {
            Arm::Vlm => false,
            Arm::Baseline(s) => s.needs_prior_context(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub k_values: Vec<usize>,
    pub seed: u64,
    pub bootstrap_resamples: usize,
    pub confidence_level: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            k_values: (0..=MAX_K).collect(),
            seed: 0,
            bootstrap_resamples: 10_000,
            confidence_level: 0.95,
        }
    }
}

impl SweepConfig {
    pub fn check(&self) -> Result<(), ExperimentError> {
        if self.k_values.is_empty() || self.k_values.iter().any(|k| *k > MAX_K) {
            return Err(ExperimentError::InvalidConfig {
                reason: format!(
                    "k values {:?} must be non-empty and at most {MAX_K}",
                    self.k_values
                ),
            });
        }
        if !(0.0 < self.confidence_level && self.confidence_level < 1.0) {
            return Err(ExperimentError::BadLevel {
                level: self.confidence_level,
            });
        }
        if self.bootstrap_resamples == 0 {
            return Err(ExperimentError::BadResamples);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Scored,
    ParseDiscarded,
    TransportFailed,
}

/// Full record of one evaluated (strategy, k, trial) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub strategy: String,
    pub k: usize,
    pub trial_index: usize,
    pub recording_id: String,
    pub frame_t_ns: i64,
    pub truth: String,
    pub chosen: Option<String>,
    pub status: TrialStatus,
    pub correct: Option<bool>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// Prior-based baseline at k = 0: nothing to answer from.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub strategy: String,
    pub k: usize,
    pub n_scored: usize,
    pub n_discarded: usize,
    pub n_transport: usize,
    pub accuracy: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub status: RowStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub seed: u64,
    pub client: String,
    pub template_version: String,
    pub k_values: Vec<usize>,
    pub n_trials: usize,
    pub question: String,
    pub arms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub metadata: SweepMetadata,
    pub rows: Vec<ResultRow>,
    pub trials: Vec<TrialRecord>,
}

impl ResultTable {
    /// Re-derives a row's accuracy from the trial log; `None` when the
    /// cell scored nothing.
    pub fn recompute_accuracy(&self, strategy: &str, k: usize) -> Option<f64> {
        let scored: Vec<&TrialRecord> = self
            .trials
            .iter()
            .filter(|t| t.strategy == strategy && t.k == k && t.status == TrialStatus::Scored)
            .collect();
        if scored.is_empty() {
            return None;
        }
        let correct = scored.iter().filter(|t| t.correct == Some(true)).count();
        Some(correct as f64 / scored.len() as f64)
    }
}

/// Builds the payload for one trial with the k most recent prior
/// fixations, excluding the trial's own fixation.
fn build_payload(
    input: &ExperimentInput,
    trial: &TrialSpec,
    k: usize,
) -> Result<QueryPayload, ExperimentError> {
    let invalid = |reason: String| ExperimentError::InvalidTrial { reason };
    let assigned = input.scanpath.assigned();
    let index = trial.scanpath_index;
    if index > assigned.len() || index < k {
        return Err(invalid(format!(
            "scanpath index {index} out of range for k={k}, {} assigned",
            assigned.len()
        )));
    }
    let priors: Vec<PriorFixation> = assigned[index - k..index]
        .iter()
        .map(|f| {
            let id = f.assigned_object().expect("assigned");
            let name = input
                .recording
                .object_name(id)
                .ok_or_else(|| invalid(format!("no catalog entry for {id}")))?;
            Ok(PriorFixation {
                object_name: name.to_string(),
                duration_ms: f.duration_ms(),
                ended_s_ago: (trial.frame_t_ns - f.end_ns).max(0) as f64 / 1e9,
            })
        })
        .collect::<Result<_, ExperimentError>>()?;

    let frame = input
        .recording
        .frame_nearest(trial.frame_t_ns)
        .ok_or_else(|| invalid("recording has no frames".into()))?;
    let visible: Vec<String> = frame
        .observations
        .iter()
        .filter(|obs| input.recording.in_fov(frame, obs))
        .filter_map(|obs| input.recording.object_name(&obs.id))
        .map(String::from)
        .collect();
    if visible.is_empty() {
        return Err(invalid(format!(
            "no visible objects at t={} in {}",
            trial.frame_t_ns, trial.recording_id
        )));
    }
    let payload = QueryPayload::new(label_card_ref(&visible), visible, priors, trial.question)?;
    Ok(payload)
}

fn evaluate_trial(
    inputs: &[ExperimentInput],
    trial: &TrialSpec,
    trial_index: usize,
    arm: &Arm,
    k: usize,
    seed: u64,
    client: &dyn VlmClient,
) -> Result<TrialRecord, ExperimentError> {
    let input = inputs
        .iter()
        .find(|i| i.recording.recording_id == trial.recording_id)
        .ok_or_else(|| ExperimentError::InvalidTrial {
            reason: format!("unknown recording {}", trial.recording_id),
        })?;
    let payload = build_payload(input, trial, k)?;
    let outcome = match arm {
        Arm::Vlm => client.query(&payload, seed),
        Arm::Baseline(strategy) => baseline_answer(*strategy, &payload, seed),
    };
    let record = |status, chosen: Option<String>, correct| TrialRecord {
        strategy: arm.name(),
        k,
        trial_index,
        recording_id: trial.recording_id.clone(),
        frame_t_ns: trial.frame_t_ns,
        truth: trial.truth.clone(),
        chosen,
        status,
        correct,
        seed,
    };
    match outcome {
        Ok(answer) => {
            let correct = answer.chosen == trial.truth;
            Ok(record(
                TrialStatus::Scored,
                Some(answer.chosen),
                Some(correct),
            ))
        }
        Err(VlmError::ParseFailure { .. }) => Ok(record(TrialStatus::ParseDiscarded, None, None)),
        Err(VlmError::Transport { .. }) => Ok(record(TrialStatus::TransportFailed, None, None)),
        Err(other) => Err(other.into()),
    }
}

/// Runs every arm at every k over the trials and aggregates accuracy with
/// bootstrap confidence intervals. Trials within a cell run in parallel;
/// prior-based baselines at k = 0 produce a skipped row.
pub fn run_sweep(
    inputs: &[ExperimentInput],
    trials: &[TrialSpec],
    arms: &[Arm],
    client: &dyn VlmClient,
    config: &SweepConfig,
) -> Result<ResultTable, ExperimentError> {
    config.check()?;
    let mut rows = Vec::new();
    let mut log: Vec<TrialRecord> = Vec::new();

    for arm in arms {
        let arm_seed = mix_seed(config.seed, stable_hash(&arm.name()));
        for &k in &config.k_values {
            if k == 0 && arm.needs_prior_context() {
                rows.push(ResultRow {
                    strategy: arm.name(),
                    k,
                    n_scored: 0,
                    n_discarded: 0,
                    n_transport: 0,
                    accuracy: None,
                    ci_low: None,
                    ci_high: None,
                    status: RowStatus::Skipped,
                });
                continue;
            }
            let cell_seed = mix_seed(arm_seed, k as u64);
            let records: Vec<TrialRecord> = trials
                .par_iter()
                .enumerate()
                .map(|(trial_index, trial)| {
                    let seed = mix_seed(cell_seed, trial_index as u64);
                    evaluate_trial(inputs, trial, trial_index, arm, k, seed, client)
                })
                .collect::<Result<_, _>>()?;

            if !records.is_empty()
                && records
                    .iter()
                    .all(|r| r.status == TrialStatus::TransportFailed)
            {
                return Err(ExperimentError::AllTransportFailed {
                    strategy: arm.name(),
                    k,
                });
            }
            let outcomes: Vec<f64> = records
                .iter()
                .filter(|r| r.status == TrialStatus::Scored)
                .map(|r| if r.correct == Some(true) { 1.0 } else { 0.0 })
                .collect();
            let n_scored = outcomes.len();
            let n_discarded = records
                .iter()
                .filter(|r| r.status == TrialStatus::ParseDiscarded)
                .count();
            let n_transport = records
                .iter()
                .filter(|r| r.status == TrialStatus::TransportFailed)
                .count();
            let (accuracy, ci_low, ci_high) = if n_scored > 0 {
                let accuracy = outcomes.iter().sum::<f64>() / n_scored as f64;
                let (lo, hi) = bootstrap_ci(
                    &outcomes,
                    config.confidence_level,
                    config.bootstrap_resamples,
                    mix_seed(cell_seed, u64::MAX),
                )?;
                (Some(accuracy), Some(lo), Some(hi))
            } else {
                (None, None, None)
            };
            rows.push(ResultRow {
                strategy: arm.name(),
                k,
                n_scored,
                n_discarded,
                n_transport,
                accuracy,
                ci_low,
                ci_high,
                status: RowStatus::Ok,
            });
            log.extend(records);
        }
    }

    let question = match trials.first() {
        None => "none".to_string(),
        Some(first) if trials.iter().all(|t| t.question == first.question) => {
            first.question.to_string()
        }
        Some(_) => "mixed".to_string(),
    };
    Ok(ResultTable {
        metadata: SweepMetadata {
            seed: config.seed,
            client: client.describe(),
            template_version: TEMPLATE_VERSION.to_string(),
            k_values: config.k_values.clone(),
            n_trials: trials.len(),
            question,
            arms: arms.iter().map(Arm::name).collect(),
        },
        rows,
        trials: log,
    })
}

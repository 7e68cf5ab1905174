//! Trial construction. A trial pins one moment of one recording, the
//! question asked there, and the ground-truth answer name. Every trial
//! needs enough gaze history to support the largest context size, so
//! eligibility starts at assigned fixation index [`MIN_PRIOR_FIXATIONS`].

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::ExperimentInput;
use crate::rng::seeded_rng;
use crate::vlm::Question;

/// Minimum number of assigned fixations that must precede a trial moment.
pub const MIN_PRIOR_FIXATIONS: usize = 10;
/// How far ahead of the trial moment an interaction may begin and still
/// count as the E2 truth.
pub const E2_HORIZON_NS: i64 = 1_000_000_000;

/// One scoreable question instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub recording_id: String,
    /// Trial moment: fixation midpoint for E1, fixation end for E2.
    pub frame_t_ns: i64,
    pub question: Question,
    /// Ground-truth object name.
    pub truth: String,
    /// Index into the recording's assigned-fixation sequence.
    pub scanpath_index: usize,
}

struct Candidate<'a> {
    input: &'a ExperimentInput,
    /// Position within the assigned-fixation subsequence.
    index: usize,
}

fn eligible_candidates(inputs: &[ExperimentInput]) -> Vec<Candidate<'_>> {
    let mut out = Vec::new();
    for input in inputs {
        let n_assigned = input.scanpath.assigned().len();
        for index in MIN_PRIOR_FIXATIONS..n_assigned {
            out.push(Candidate { input, index });
        }
    }
    out
}

/// Samples up to `n` "what am I looking at?" trials uniformly without
/// replacement from the eligible pool across all inputs. Returns the
/// trials in stable (input, time) order plus the shortfall when the pool
/// is smaller than `n`.
pub fn sample_e1_trials(
    inputs: &[ExperimentInput],
    n: usize,
    seed: u64,
) -> (Vec<TrialSpec>, usize) {
    let pool: Vec<TrialSpec> = eligible_candidates(inputs)
        .into_iter()
        .filter_map(|c| {
            let fixation = c.input.scanpath.assigned()[c.index];
            let id = fixation.assigned_object().expect("assigned");
            let truth = c.input.recording.object_name(id)?.to_string();
            Some(TrialSpec {
                recording_id: c.input.recording.recording_id.clone(),
                frame_t_ns: fixation.midpoint_ns(),
                question: Question::E1,
                truth,
                scanpath_index: c.index,
            })
        })
        .collect();

    if pool.len() <= n {
        let shortfall = n - pool.len();
        return (pool, shortfall);
    }
    let mut rng = seeded_rng(seed);
    let mut picked = index::sample(&mut rng, pool.len(), n).into_vec();
    picked.sort_unstable();
    (picked.into_iter().map(|i| pool[i].clone()).collect(), 0)
}

/// Builds every eligible "what am I going to interact with?" trial: the
/// trial moment is a fixation end, and the truth is the object whose
/// interaction begins within the following second, bounds (t, t + 1 s].
/// The truth follows the interaction, not the gaze, so it can differ from
/// the fixated object.
pub fn sample_e2_trials(inputs: &[ExperimentInput]) -> Vec<TrialSpec> {
    eligible_candidates(inputs)
        .into_iter()
        .filter_map(|c| {
            let fixation = c.input.scanpath.assigned()[c.index];
            let t = fixation.end_ns;
            let onset = c
                .input
                .recording
                .interactions
                .iter()
                .filter(|ev| ev.start_ns > t && ev.start_ns <= t + E2_HORIZON_NS)
                .min_by_key(|ev| ev.start_ns)?;
            let truth = c.input.recording.object_name(&onset.object_id)?.to_string();
            Some(TrialSpec {
                recording_id: c.input.recording.recording_id.clone(),
                frame_t_ns: t,
                question: Question::E2,
                truth,
                scanpath_index: c.index,
            })
        })
        .collect()
}

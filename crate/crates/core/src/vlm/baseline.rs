//! Non-VLM reference strategies. Each produces an [`AgentAnswer`] directly
//! from the payload; prior-based strategies refuse payloads without
//! context instead of guessing.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{serialize_answer, AgentAnswer, QueryPayload, VlmError};
use crate::rng::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineStrategy {
    /// Uniform choice among the visible objects.
    RandomVisible,
    /// Uniform choice over the multiset of prior fixation names.
    RandomPrior,
    /// Most frequent prior name; ties go to the most recent occurrence.
    GreedyMostFixated,
    /// The most recent prior fixation.
    PreviousFixation,
}

impl BaselineStrategy {
    pub const ALL: [BaselineStrategy; 4] = [
        BaselineStrategy::RandomVisible,
        BaselineStrategy::RandomPrior,
        BaselineStrategy::GreedyMostFixated,
        BaselineStrategy::PreviousFixation,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BaselineStrategy::RandomVisible => "random_visible",
            BaselineStrategy::RandomPrior => "random_prior",
            BaselineStrategy::GreedyMostFixated => "greedy_most_fixated",
            BaselineStrategy::PreviousFixation => "previous_fixation",
        }
    }

    /// Whether the strategy reads the prior-fixation context at all.
    pub fn needs_prior_context(&self) -> bool {
        !matches!(self, BaselineStrategy::RandomVisible)
    }
}

impl std::str::FromStr for BaselineStrategy {
    type Err = VlmError;

    fn from_str(s: &str) -> Result<Self, VlmError> {
        BaselineStrategy::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| VlmError::InvalidConfig {
                reason: format!("unknown baseline {s:?}"),
            })
    }
}

impl std::fmt::Display for BaselineStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Answers one payload with the given strategy. Random strategies draw
/// from a fresh stream seeded by `seed`, so equal seeds reproduce equal
/// answers.
pub fn baseline_answer(
    strategy: BaselineStrategy,
    payload: &QueryPayload,
    seed: u64,
) -> Result<AgentAnswer, VlmError> {
    if strategy.needs_prior_context() && payload.prior_fixations.is_empty() {
        return Err(VlmError::PriorContextRequired { strategy });
    }
    let priors = &payload.prior_fixations;
    let chosen = match strategy {
        BaselineStrategy::RandomVisible => {
            let mut rng = seeded_rng(seed);
            payload.visible_objects[rng.gen_range(0..payload.visible_objects.len())].clone()
        }
        BaselineStrategy::RandomPrior => {
            let mut rng = seeded_rng(seed);
            priors[rng.gen_range(0..priors.len())].object_name.clone()
        }
        BaselineStrategy::GreedyMostFixated => {
            // Max by (count, index): equal counts resolve to the later,
            // i.e. more recent, occurrence.
            let best = (0..priors.len())
                .max_by_key(|&i| {
                    let name = &priors[i].object_name;
                    let count = priors.iter().filter(|p| &p.object_name == name).count();
                    (count, i)
                })
                .expect("non-empty priors");
            priors[best].object_name.clone()
        }
        BaselineStrategy::PreviousFixation => {
            priors.last().expect("non-empty priors").object_name.clone()
        }
    };
    let raw = serialize_answer(&chosen);
    Ok(AgentAnswer { chosen, raw })
}

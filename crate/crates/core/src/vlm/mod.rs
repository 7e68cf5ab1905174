//! Gaze-context queries against a vision-language agent.
//!
//! A [`QueryPayload`] bundles one egocentric image reference, the names of
//! the currently visible objects, and the k most recent prior fixations.
//! Prompt construction, answer parsing, the live and mock clients, and the
//! non-VLM baselines live in the submodules.

mod baseline;
mod client;
mod parse;
mod prompt;

pub use baseline::{baseline_answer, BaselineStrategy};
pub use client::{
    label_card_ref, render_label_card_svg, ClientConfig, LiveClient, MockClient, MockStrategy,
    VlmClient,
};
pub use parse::parse_answer;
pub use prompt::{build_prompt, render_text, PromptBlock, TEMPLATE_VERSION};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound on the number of prior fixations in a payload.
pub const MAX_K: usize = 10;

#[derive(Debug, Error)]
pub enum VlmError {
    #[error("invalid payload: {reason}")]
    InvalidPayload { reason: String },
    #[error("invalid client config: {reason}")]
    InvalidConfig { reason: String },
    #[error("answer not parseable: {reason}")]
    ParseFailure { reason: String, raw: String },
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("API key environment variable {var} is not set")]
    MissingApiKey { var: String },
    #[error("baseline {strategy} needs at least one prior fixation")]
    PriorContextRequired { strategy: BaselineStrategy },
}

/// The two experiment questions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Question {
    E1,
    E2,
}

impl Question {
    pub fn text(&self) -> &'static str {
        match self {
            Question::E1 => "What am I looking at?",
            Question::E2 => "What am I going to interact with?",
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Question::E1 => "e1",
            Question::E2 => "e2",
        }
    }
}

impl std::fmt::Display for Question {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One line of gaze history handed to the agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorFixation {
    pub object_name: String,
    pub duration_ms: f64,
    pub ended_s_ago: f64,
}

/// One query to the agent. Invariants are enforced by [`QueryPayload::new`]:
/// visible names are unique, trimmed and non-empty; prior fixations are
/// ordered oldest first; k is at most [`MAX_K`]. Prior fixation names need
/// not be visible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPayload {
    pub image_ref: String,
    pub visible_objects: Vec<String>,
    pub prior_fixations: Vec<PriorFixation>,
    pub question: Question,
}

impl QueryPayload {
    pub fn new(
        image_ref: String,
        visible_objects: Vec<String>,
        prior_fixations: Vec<PriorFixation>,
        question: Question,
    ) -> Result<Self, VlmError> {
        let fail = |reason: String| Err(VlmError::InvalidPayload { reason });
        if visible_objects.is_empty() {
            return fail("no visible objects".into());
        }
        for name in &visible_objects {
            if name.trim().is_empty() {
                return fail("blank visible object name".into());
            }
            if name.trim() != name {
                return fail(format!("visible name {name:?} has surrounding whitespace"));
            }
        }
        for (i, a) in visible_objects.iter().enumerate() {
            if visible_objects[i + 1..].contains(a) {
                return fail(format!("duplicate visible name {a:?}"));
            }
        }
        if prior_fixations.len() > MAX_K {
            return fail(format!(
                "{} prior fixations exceed the cap of {MAX_K}",
                prior_fixations.len()
            ));
        }
        for prior in &prior_fixations {
            if prior.object_name.trim().is_empty() {
                return fail("blank prior fixation name".into());
            }
            if !(prior.duration_ms.is_finite() && prior.duration_ms > 0.0) {
                return fail(format!("bad prior duration {}", prior.duration_ms));
            }
            if !(prior.ended_s_ago.is_finite() && prior.ended_s_ago >= 0.0) {
                return fail(format!("bad prior age {}", prior.ended_s_ago));
            }
        }
        // Oldest first: ages must not increase along the list.
        for pair in prior_fixations.windows(2) {
            if pair[0].ended_s_ago < pair[1].ended_s_ago {
                return fail("prior fixations not ordered oldest first".into());
            }
        }
        Ok(Self {
            image_ref,
            visible_objects,
            prior_fixations,
            question,
        })
    }

    /// Number of prior fixations attached to this query.
    pub fn k(&self) -> usize {
        self.prior_fixations.len()
    }
}

/// A parsed agent response; `chosen` is canonicalized to the casing used
/// in the payload's visible-object list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentAnswer {
    pub chosen: String,
    pub raw: String,
}

/// Renders an answer the way a well-behaved agent would.
pub fn serialize_answer(chosen: &str) -> String {
    serde_json::json!({ "answer": chosen }).to_string()
}

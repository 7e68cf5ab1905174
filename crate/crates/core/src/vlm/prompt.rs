//! Prompt assembly. `build_prompt` is a pure function of the payload; any
//! change to the wording below must bump [`TEMPLATE_VERSION`], which is
//! recorded in experiment outputs.

use super::QueryPayload;

pub const TEMPLATE_VERSION: &str = "v1";

/// Ordered prompt parts. The context block is present only when the
/// payload carries at least one prior fixation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PromptBlock {
    System(String),
    Context(String),
    Image(String),
    Question(String),
}

pub fn build_prompt(payload: &QueryPayload) -> Vec<PromptBlock> {
    let mut blocks = Vec::with_capacity(4);

    let mut system = String::from(
        "You see the world through a head-mounted camera worn by a person. \
         Answer questions about their attention from their point of view.\n",
    );
    system.push_str("Visible objects: ");
    system.push_str(&payload.visible_objects.join(", "));
    system.push_str(
        ".\nReply with exactly one JSON object of the form \
         {\"answer\": \"<name>\"} where <name> is one of the visible objects. \
         Do not add any other text.",
    );
    blocks.push(PromptBlock::System(system));

    if !payload.prior_fixations.is_empty() {
        let mut context = String::from("Gaze history, oldest first:\n");
        for prior in &payload.prior_fixations {
            context.push_str(&format!(
                "- looked at {} for {:.0} ms, {:.1} s ago\n",
                prior.object_name, prior.duration_ms, prior.ended_s_ago
            ));
        }
        blocks.push(PromptBlock::Context(context.trim_end().to_string()));
    }

    blocks.push(PromptBlock::Image(payload.image_ref.clone()));
    blocks.push(PromptBlock::Question(payload.question.text().to_string()));
    blocks
}

/// Concatenates the textual blocks for transports that send the image as a
/// separate message part.
pub fn render_text(blocks: &[PromptBlock]) -> String {
    let mut parts = Vec::new();
    for block in blocks {
        match block {
            PromptBlock::System(t) | PromptBlock::Context(t) | PromptBlock::Question(t) => {
                parts.push(t.as_str())
            }
            PromptBlock::Image(_) => {}
        }
    }
    parts.join("\n\n")
}

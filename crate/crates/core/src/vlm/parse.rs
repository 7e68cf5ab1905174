//! Answer extraction. Agents are asked for a bare JSON object but often
//! wrap it in prose; the parser scans for the first position from which a
//! JSON object parses, and that object decides the outcome.

use serde_json::Value;

use super::{AgentAnswer, VlmError};

/// Extracts the agent's choice from a raw response and canonicalizes it to
/// the casing used in `visible`. Matching trims surrounding whitespace and
/// ignores case. Any failure is a [`VlmError::ParseFailure`]; callers
/// discard such trials rather than scoring them as wrong.
pub fn parse_answer(raw: &str, visible: &[String]) -> Result<AgentAnswer, VlmError> {
    let fail = |reason: String| VlmError::ParseFailure {
        reason,
        raw: raw.to_string(),
    };
    let object = first_json_object(raw).ok_or_else(|| fail("no JSON object in response".into()))?;
    let answer = object
        .get("answer")
        .ok_or_else(|| fail("first JSON object lacks an \"answer\" key".into()))?;
    let answer = answer
        .as_str()
        .ok_or_else(|| fail("\"answer\" value is not a string".into()))?;
    let wanted = answer.trim().to_lowercase();
    let canonical = visible
        .iter()
        .find(|name| name.trim().to_lowercase() == wanted)
        .ok_or_else(|| fail(format!("answer {answer:?} names no visible object")))?;
    Ok(AgentAnswer {
        chosen: canonical.clone(),
        raw: raw.to_string(),
    })
}

/// First JSON object parseable from any `{` position, scanning left to
/// right. Trailing text after the object is ignored.
fn first_json_object(raw: &str) -> Option<serde_json::Map<String, Value>> {
    for (i, _) in raw.char_indices().filter(|(_, c)| *c == '{') {
        let mut stream = serde_json::Deserializer::from_str(&raw[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(map))) = stream.next() {
            return Some(map);
        }
    }
    None
}

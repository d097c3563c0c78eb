use std::collections::BTreeMap;

use rand::Rng;

use super::template::GrammarRule;
use super::CompositionError;
use crate::rng;

/// `{name}` placeholders in pattern order.
pub fn placeholders(pattern: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = pattern;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                out.push(&after[..close]);
                rest = &after[close + 1..];
            }
            None => break,
        }
    }
    out
}

pub fn missing_slot<'a>(rule: &'a GrammarRule, elements: &BTreeMap<String, String>) -> Option<&'a str> {
    rule.slots
        .iter()
        .find(|s| elements.get(s.as_str()).is_none_or(|v| v.trim().is_empty()))
        .map(String::as_str)
}

/// Uniform choice on the frame's own stream, `grammar:<frame_id>`.
pub fn select_grammar(rules: &[GrammarRule], rng_seed: u64, frame_id: &str) -> Result<usize, CompositionError> {
    if rules.is_empty() {
        return Err(CompositionError::EmptyGrammarSet(frame_id.to_string()));
    }
    let mut rng = rng::stream(rng_seed, &format!("grammar:{frame_id}"));
    Ok(rng.gen_range(0..rules.len()))
}

pub fn expand_grammar(rule: &GrammarRule, elements: &BTreeMap<String, String>) -> Result<String, CompositionError> {
    if let Some(slot) = missing_slot(rule, elements) {
        return Err(CompositionError::UnfilledSlot(slot.to_string()));
    }
    let mut out = rule.pattern.clone();
    for slot in &rule.slots {
        // braces in content would read as residue placeholders
        let value = elements[slot].replace('{', "(").replace('}', ")");
        out = out.replace(&format!("{{{slot}}}"), value.trim());
    }
    Ok(out)
}

//! Editable text banks for thoughts and corrupted responses.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::InjectorError;

const BUILTIN: &str = include_str!("../../resources/templates.json");

/// Response banks every template file must provide.
pub const RESPONSE_BANKS: [&str; 7] = [
    "confirmation",
    "hesitation",
    "hallucination",
    "failure_claim_action",
    "failure_claim_search",
    "numeric_claim",
    "success_claim",
];

/// Thought banks every template file must provide.
pub const THOUGHT_BANKS: [&str; 10] = [
    "premature-invocation",
    "tool-prediction",
    "required-arguments",
    "optional-arguments-add",
    "optional-arguments-alter",
    "optional-arguments-drop",
    "observation-reasoning",
    "non-invocation-confirmation",
    "non-invocation-hesitation",
    "non-invocation-hallucination",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Templates {
    pub thoughts: BTreeMap<String, Vec<String>>,
    pub responses: BTreeMap<String, Vec<String>>,
}

impl Default for Templates {
    fn default() -> Self {
        Self::from_json(BUILTIN).expect("built-in templates are valid")
    }
}

impl Templates {
    pub fn from_json(text: &str) -> Result<Self, InjectorError> {
        let t: Templates = serde_json::from_str(text).map_err(|e| InjectorError::Templates(e.to_string()))?;
        for bank in THOUGHT_BANKS {
            if t.thoughts.get(bank).is_none_or(Vec::is_empty) {
                return Err(InjectorError::Templates(format!("missing thought bank `{bank}`")));
            }
        }
        for bank in RESPONSE_BANKS {
            if t.responses.get(bank).is_none_or(Vec::is_empty) {
                return Err(InjectorError::Templates(format!("missing response bank `{bank}`")));
            }
        }
        Ok(t)
    }

    pub fn thought<R: Rng>(&self, bank: &str, slots: &Slots, rng: &mut R) -> String {
        fill(pick(&self.thoughts, bank, rng), slots)
    }

    /// The first thought of a bank; used where no generator is at hand.
    pub fn first_thought(&self, bank: &str, slots: &Slots) -> String {
        fill(&self.thoughts[bank][0], slots)
    }

    pub fn response<R: Rng>(&self, bank: &str, slots: &Slots, rng: &mut R) -> String {
        fill(pick(&self.responses, bank, rng), slots)
    }

    pub fn response_bank(&self, bank: &str) -> &[String] {
        self.responses.get(bank).map_or(&[], Vec::as_slice)
    }
}

fn pick<'a, R: Rng>(banks: &'a BTreeMap<String, Vec<String>>, bank: &str, rng: &mut R) -> &'a str {
    banks[bank].choose(rng).expect("banks are non-empty")
}

pub type Slots = BTreeMap<&'static str, String>;

/// Replaces every `{name}` with its slot value. Unknown names are left as is.
pub fn fill(template: &str, slots: &Slots) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if slots.contains_key(&after[..close]) => {
                out.push_str(&slots[&after[..close]]);
                rest = &after[close + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_loads() {
        let t = Templates::default();
        assert!(t.thoughts.values().all(|v| !v.is_empty()));
    }

    #[test]
    fn fill_slots() {
        let slots: Slots = [("tool", "FindBus".to_string())].into();
        assert_eq!(fill("call {tool}() {x}", &slots), "call FindBus() {x}");
    }

    #[test]
    fn missing_bank_rejected() {
        assert!(Templates::from_json(r#"{"thoughts":{},"responses":{}}"#).is_err());
    }
}

//! Few-shot generation of injected dialogues by a text model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::transform::injected_id;
use super::{ErrorLabel, Hint, InjectedDialogue, InjectionMode, InjectionProvenance, Injector, InjectorError, Transform};
use crate::category::ErrorCategory;
use crate::dialogue::{parse_turn, render_dialogue, Dialogue, Turn};
use crate::endpoint::{CompletionRequest, TextModel, DEFAULT_TEMPERATURE};

const SYSTEM_PROMPT: &str = include_str!("../../resources/injection_system.txt");
const USER_PROMPT: &str = include_str!("../../resources/injection_user.txt");

pub const MIN_DEMONSTRATIONS: usize = 5;
pub const MAX_DEMONSTRATIONS: usize = 7;

/// A worked injection shown to the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub category: ErrorCategory,
    /// The clean dialogue, in dialogue text format.
    pub source_dialogue: String,
    pub error_turn: usize,
    pub explanation: String,
    /// The corrupted turn, in dialogue text format.
    pub corrupted_turn: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub insertion_steps: Option<String>,
}

impl Demonstration {
    /// Builds a demonstration from an injection and its source.
    pub fn from_injection(inj: &InjectedDialogue, source: &Dialogue, pool: &crate::dialogue::SchemaPool) -> Result<Self, InjectorError> {
        let k = inj.provenance.error_turn;
        let turn = inj.dialogue.turn(k).expect("injections end at the error turn");
        Ok(Self {
            category: inj.label.category,
            source_dialogue: render_dialogue(source, source.len(), pool)?,
            error_turn: k,
            explanation: inj.label.thought.clone(),
            corrupted_turn: crate::dialogue::render_turn(turn, pool)?.trim_end().to_string(),
            insertion_steps: None,
        })
    }

    /// The JSON object the model is expected to produce for this example.
    pub fn expected_json(&self) -> String {
        let mut obj = serde_json::Map::new();
        obj.insert("Error Insertion Steps".into(), Value::String(self.insertion_steps.clone().unwrap_or_default()));
        obj.insert("Error Location".into(), Value::String(format!("Turn {}", self.error_turn)));
        obj.insert("Explanation".into(), Value::String(self.explanation.clone()));
        obj.insert("Corrupted Dialogue".into(), Value::String(self.corrupted_turn.clone()));
        serde_json::to_string_pretty(&Value::Object(obj)).expect("json values serialize")
    }
}

/// One demonstration as it appears inside `<demonstrations>`.
pub fn render_demonstration(i: usize, demo: &Demonstration) -> String {
    format!(
        "Example {i}:\nInput dialogue:\n{}\n\nJSON Output:\n{}\n",
        demo.source_dialogue.trim_end(),
        demo.expected_json()
    )
}

/// System and user prompts for injecting `category` into `query` (dialogue
/// text), following the fixed generation template.
pub fn injection_prompts(category: ErrorCategory, demos: &[&Demonstration], query: &str, hint: &Hint) -> (String, String) {
    let description = format!("{}: {}", category.name(), category.description());
    let demonstrations: Vec<String> = demos.iter().enumerate().map(|(i, d)| render_demonstration(i + 1, d)).collect();
    let parts = [description, demonstrations.join("\n"), query.trim_end().to_string(), hint.to_string()];
    let mut user = String::new();
    let mut rest = USER_PROMPT;
    for part in &parts {
        let at = rest.find("{}").expect("template has four placeholders");
        user.push_str(&rest[..at]);
        user.push_str(part);
        rest = &rest[at + 2..];
    }
    user.push_str(rest);
    (SYSTEM_PROMPT.to_string(), user)
}

/// The fields of a model's injection answer that are used downstream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedInjection {
    pub error_turn: usize,
    pub explanation: String,
    pub corrupted_turn: String,
    /// Kept for provenance only; never a training target.
    pub steps: Option<String>,
}

fn malformed(field: &str, detail: impl Into<String>) -> InjectorError {
    InjectorError::MalformedModelJson { field: field.to_string(), detail: detail.into() }
}

/// Extracts location, explanation and corrupted turn from a model answer.
/// Text around the outermost JSON object is ignored; the location may be a
/// number or a string such as `"Turn 2"`.
pub fn parse_injection_response(text: &str) -> Result<ParsedInjection, InjectorError> {
    let (Some(start), Some(end)) = (text.find('{'), text.rfind('}')) else {
        return Err(malformed("json", "no JSON object in the answer"));
    };
    if end < start {
        return Err(malformed("json", "no JSON object in the answer"));
    }
    let value: Value = serde_json::from_str(&text[start..=end]).map_err(|e| malformed("json", e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| malformed("json", "not an object"))?;
    let get = |name: &str| obj.iter().find(|(k, _)| k.trim().eq_ignore_ascii_case(name)).map(|(_, v)| v);

    let error_turn = match get("Error Location") {
        Some(Value::Number(n)) => n.as_u64().map(|n| n as usize),
        Some(Value::String(s)) => s
            .split(|c: char| !c.is_ascii_digit())
            .find(|p| !p.is_empty())
            .and_then(|p| p.parse().ok()),
        Some(_) => None,
        None => return Err(malformed("Error Location", "missing")),
    }
    .filter(|k| *k > 0)
    .ok_or_else(|| malformed("Error Location", "not a turn number"))?;

    let text_field = |name: &str| -> Result<String, InjectorError> {
        match get(name) {
            Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
            Some(_) => Err(malformed(name, "expected a non-empty string")),
            None => Err(malformed(name, "missing")),
        }
    };
    let explanation = text_field("Explanation")?;
    let corrupted_turn = text_field("Corrupted Dialogue")?;
    let steps = match get("Error Insertion Steps") {
        Some(Value::String(s)) => Some(s.clone()),
        Some(Value::Array(items)) => {
            Some(items.iter().map(|v| v.as_str().map_or_else(|| v.to_string(), str::to_string)).collect::<Vec<_>>().join("\n"))
        }
        _ => None,
    };
    Ok(ParsedInjection { error_turn, explanation, corrupted_turn, steps })
}

/// Generation settings for model-backed injection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmSettings {
    pub temperature: f64,
    pub max_tokens: u32,
    /// Maximum requests in flight for corpus-level injection.
    pub concurrency: usize,
}

impl Default for LlmSettings {
    fn default() -> Self {
        Self { temperature: DEFAULT_TEMPERATURE, max_tokens: 2048, concurrency: 4 }
    }
}

impl Injector {
    /// Asks `model` to inject the hinted error, then splices the returned
    /// turn into the source dialogue and truncates after it.
    pub fn inject_llm(
        &self,
        d: &Dialogue,
        hint: &Hint,
        demos: &[Demonstration],
        model: &dyn TextModel,
        settings: &LlmSettings,
    ) -> Result<InjectedDialogue, InjectorError> {
        let c = hint.category;
        let chosen: Vec<&Demonstration> = demos.iter().filter(|x| x.category == c).take(MAX_DEMONSTRATIONS).collect();
        if chosen.len() < MIN_DEMONSTRATIONS {
            return Err(InjectorError::InsufficientDemonstrations { category: c, found: chosen.len() });
        }
        let query = render_dialogue(d, d.len(), self.pool())?;
        let (system, user) = injection_prompts(c, &chosen, &query, hint);
        let request = CompletionRequest::new(user)
            .with_system(system)
            .with_temperature(settings.temperature)
            .with_max_tokens(settings.max_tokens);
        let answer = model.complete(&request)?;
        self.splice_answer(d, hint, &answer)
    }

    /// Turns a model answer into an injection of `d`.
    pub fn splice_answer(&self, d: &Dialogue, hint: &Hint, answer: &str) -> Result<InjectedDialogue, InjectorError> {
        let c = hint.category;
        let parsed = parse_injection_response(answer)?;
        let k = parsed.error_turn;
        if !self.viable_sites(d, c).contains(&k) {
            return Err(InjectorError::LocationMismatch { turn: k });
        }
        let turn = parse_turn(&parsed.corrupted_turn, self.pool())
            .map_err(|e| malformed("Corrupted Dialogue", e.to_string()))?;
        if turn.index != k {
            return Err(InjectorError::LocationMismatch { turn: turn.index });
        }
        let source = d.turn(k).expect("viable sites are in range");
        if turn.user != source.user {
            log::warn!("{}: model rewrote the user message of turn {k}; keeping the original", d.id);
        }
        if turn.assistant == source.assistant {
            return Err(malformed("Corrupted Dialogue", "the assistant turn is unchanged"));
        }
        let mut turns = d.turns[..k - 1].to_vec();
        turns.push(Turn { index: k, user: source.user.clone(), assistant: turn.assistant });
        Ok(InjectedDialogue {
            dialogue: Dialogue { id: injected_id(&d.id, c, k, hint.seed), turns },
            label: ErrorLabel { category: c, thought: parsed.explanation.trim().to_string() },
            provenance: InjectionProvenance {
                source_id: d.id.clone(),
                category: c,
                error_turn: k,
                transform: Transform::Generated { notes: parsed.steps.unwrap_or_default() },
                mode: InjectionMode::Llm,
                hint: hint.clone(),
            },
        })
    }

    /// Model-backed injection over a corpus with at most
    /// `settings.concurrency` requests in flight. Per-dialogue failures are
    /// returned alongside the successes.
    pub fn inject_llm_corpus(
        &self,
        sources: &[Dialogue],
        c: ErrorCategory,
        seed: u64,
        demos: &[Demonstration],
        model: &dyn TextModel,
        settings: &LlmSettings,
    ) -> Vec<(String, Result<InjectedDialogue, InjectorError>)> {
        let workers = rayon::ThreadPoolBuilder::new()
            .num_threads(settings.concurrency.max(1))
            .build()
            .expect("thread pool");
        workers.install(|| {
            sources
                .par_iter()
                .filter(|d| !self.viable_sites(d, c).is_empty())
                .map(|d| {
                    let res = self.make_hint(d, c, seed).and_then(|h| self.inject_llm(d, &h, demos, model, settings));
                    (d.id.clone(), res)
                })
                .collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn location_forms() {
        let a = r#"{"Error Location": "Turn 2", "Explanation": "e", "Corrupted Dialogue": "c"}"#;
        assert_eq!(parse_injection_response(a).unwrap().error_turn, 2);
        let b = r#"Sure: {"Error Location": 4, "Explanation": "e", "Corrupted Dialogue": "c", "Error Insertion Steps": ["a", "b"]}"#;
        let p = parse_injection_response(b).unwrap();
        assert_eq!(p.error_turn, 4);
        assert_eq!(p.steps.as_deref(), Some("a\nb"));
    }

    #[test]
    fn malformed_answers() {
        assert!(matches!(parse_injection_response(""), Err(InjectorError::MalformedModelJson { .. })));
        let missing = r#"{"Error Location": 2, "Explanation": "e"}"#;
        match parse_injection_response(missing) {
            Err(InjectorError::MalformedModelJson { field, .. }) => assert_eq!(field, "Corrupted Dialogue"),
            other => panic!("{other:?}"),
        }
        assert!(parse_injection_response(r#"{"Error Location": "soon", "Explanation": "e", "Corrupted Dialogue": "c"}"#).is_err());
    }

    #[test]
    fn user_prompt_sections_in_order() {
        let hint = Hint { category: ErrorCategory::ToolPrediction, turn: 3, focus_tool: Some("FindBus".into()), focus_arg: None, seed: 0 };
        let (system, user) = injection_prompts(ErrorCategory::ToolPrediction, &[], "# Turn 1", &hint);
        assert!(system.contains("Only return the JSON Object."));
        let pos: Vec<usize> = ["<error-description>", "<demonstrations>", "<query>", "<hint>", "JSON Output:"]
            .iter()
            .map(|t| user.find(t).unwrap())
            .collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert!(user.contains("The assistant calls the wrong tool for the task."));
        assert!(user.contains("Focus on the tool call FindBus() at Turn 3."));
        assert!(!user.contains("{}"));
    }
}

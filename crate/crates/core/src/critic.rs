//! Critic prompt construction, verdict parsing and critic implementations.
//!
//! A critic looks at a dialogue prefix and judges only the assistant's last
//! action. [`ModelCritic`] asks a text model (remote or replayed);
//! [`OracleCritic`] diffs the prefix against the ground truth and is used to
//! test the rest of the pipeline.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::category::ErrorCategory;
use crate::dialogue::{render_dialogue, render_pool_entry, AssistantAction, Dialogue, DialogueError, SchemaPool};
use crate::endpoint::{CompletionRequest, EndpointConfig, EndpointError, HttpModel, ReplayModel, TextModel, DEFAULT_TEMPERATURE};
use crate::injector::{mentioned, numbers_in, quoted_and, quoted_list, seeded_rng, slots, Templates};
use crate::metrics::{match_tool_call, ArgMatch, DEFAULT_FUZZY_THRESHOLD};

/// Completion used for every error-free training example, and the text a
/// critic is expected to produce for a correct turn.
pub const NO_ERROR_SENTENCE: &str = "The assistant's final response was appropriate. From the predefined list of error types, the assistant did not commit any errors in the final turn. Therefore, this is a correct turn.";

/// Clause whose presence marks a no-error verdict.
pub const NO_ERROR_CLAUSE: &str = "did not commit any errors";

const PROMPT_TEMPLATE: &str = include_str!("../resources/critic_prompt.txt");

/// Default completion budget for critic calls.
pub const DEFAULT_CRITIC_MAX_TOKENS: u32 = 256;

#[derive(Debug, Error)]
pub enum CriticError {
    #[error("cannot critique an empty dialogue prefix")]
    EmptyPrefix,
    #[error("verdict names no error category and lacks the no-error clause: {0:?}")]
    Unparseable(String),
    #[error("prefix diverges from the ground truth at turn {turn}")]
    PrefixMismatch { turn: usize },
    #[error("no ground-truth dialogue for `{0}`")]
    MissingReference(String),
    #[error(transparent)]
    Transport(#[from] EndpointError),
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    NoError,
    Detected { category: ErrorCategory, thought: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticVerdict {
    #[serde(flatten)]
    pub verdict: Verdict,
    /// Text the critic produced.
    pub raw: String,
    /// Set when the raw text could not be read and the verdict fell back to
    /// no-error.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unparseable: bool,
}

impl CriticVerdict {
    pub fn no_error() -> Self {
        Self { verdict: Verdict::NoError, raw: NO_ERROR_SENTENCE.to_string(), unparseable: false }
    }

    pub fn detected(category: ErrorCategory, thought: impl Into<String>) -> Self {
        let thought = thought.into();
        Self { raw: format_label(category, &thought), verdict: Verdict::Detected { category, thought }, unparseable: false }
    }

    /// Parses `text`, falling back to no-error (flagged) when unreadable.
    pub fn lenient(text: &str) -> Self {
        parse_verdict(text).unwrap_or_else(|_| {
            log::warn!("unparseable critic output treated as no-error: {:?}", truncate(text, 120));
            Self { verdict: Verdict::NoError, raw: text.to_string(), unparseable: true }
        })
    }

    pub fn category(&self) -> Option<ErrorCategory> {
        match &self.verdict {
            Verdict::Detected { category, .. } => Some(*category),
            Verdict::NoError => None,
        }
    }

    pub fn thought(&self) -> Option<&str> {
        match &self.verdict {
            Verdict::Detected { thought, .. } => Some(thought),
            Verdict::NoError => None,
        }
    }

    pub fn is_detected(&self) -> bool {
        self.category().is_some()
    }
}

fn truncate(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

/// Label text for a detected error: `"<category>: <thought>"`.
pub fn format_label(category: ErrorCategory, thought: &str) -> String {
    format!("{}: {}", category.name(), thought.trim())
}

/// Text a critic should produce for `verdict`.
pub fn render_verdict(verdict: &Verdict) -> String {
    match verdict {
        Verdict::NoError => NO_ERROR_SENTENCE.to_string(),
        Verdict::Detected { category, thought } => format_label(*category, thought),
    }
}

/// Reads a critic's output. Category-first (`"cat: thought"`) and
/// thought-first (`"thought: cat"`) layouts both work; otherwise the first
/// category named anywhere in the text wins and the whole text is the thought.
pub fn parse_verdict(text: &str) -> Result<CriticVerdict, CriticError> {
    let trimmed = text.trim();
    if trimmed.contains(NO_ERROR_CLAUSE) {
        return Ok(CriticVerdict { verdict: Verdict::NoError, raw: text.to_string(), unparseable: false });
    }
    let found = trimmed
        .split_once(':')
        .and_then(|(head, rest)| ErrorCategory::from_label(head).map(|c| (c, rest.trim())))
        .or_else(|| {
            trimmed.rsplit_once(':').and_then(|(rest, tail)| ErrorCategory::from_label(tail).map(|c| (c, rest.trim())))
        })
        .or_else(|| ErrorCategory::find_first(trimmed).map(|(c, _)| (c, trimmed)));
    let Some((category, thought)) = found else {
        return Err(CriticError::Unparseable(text.to_string()));
    };
    let thought = if thought.is_empty() { category.description() } else { thought };
    Ok(CriticVerdict {
        verdict: Verdict::Detected { category, thought: thought.to_string() },
        raw: text.to_string(),
        unparseable: false,
    })
}

/// The `<error_types>` section: one `- name: description` line per category.
pub fn render_error_types() -> String {
    ErrorCategory::ALL.iter().map(|c| format!("- {}: {}", c.name(), c.description())).collect::<Vec<_>>().join("\n")
}

/// The `<api_pool>` section: every tool with its arguments.
pub fn render_api_pool(pool: &SchemaPool) -> String {
    pool.iter().map(render_pool_entry).collect::<Vec<_>>().join("\n").trim_end().to_string()
}

/// Instruction block with both sections filled, without any dialogue.
pub fn critic_preamble(pool: &SchemaPool) -> String {
    let mut parts = PROMPT_TEMPLATE.splitn(3, "{}");
    let (a, b, c) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""), parts.next().unwrap_or(""));
    format!("{a}{}{b}{}{c}", render_error_types(), render_api_pool(pool))
}

/// Full critic input: the preamble, a blank line, then the rendered prefix.
pub fn build_critic_prompt(prefix: &Dialogue, pool: &SchemaPool) -> Result<String, CriticError> {
    if prefix.is_empty() {
        return Err(CriticError::EmptyPrefix);
    }
    if pool.is_empty() {
        log::warn!("building a critic prompt with an empty tool pool");
    }
    let dialogue = render_dialogue(prefix, prefix.len(), pool)?;
    Ok(format!("{}\n\n{dialogue}", critic_preamble(pool).trim_end()))
}

/// Something that judges the last assistant action of a prefix.
pub trait Critic: Send + Sync {
    fn inspect(&self, prefix: &Dialogue) -> Result<CriticVerdict, CriticError>;

    fn identity(&self) -> String;
}

impl<T: Critic + ?Sized> Critic for &T {
    fn inspect(&self, prefix: &Dialogue) -> Result<CriticVerdict, CriticError> {
        (**self).inspect(prefix)
    }

    fn identity(&self) -> String {
        (**self).identity()
    }
}

impl<T: Critic + ?Sized> Critic for Box<T> {
    fn inspect(&self, prefix: &Dialogue) -> Result<CriticVerdict, CriticError> {
        (**self).inspect(prefix)
    }

    fn identity(&self) -> String {
        (**self).identity()
    }
}

/// A critic backed by a text model.
pub struct ModelCritic<M> {
    model: M,
    pool: SchemaPool,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl<M: TextModel> ModelCritic<M> {
    pub fn new(model: M, pool: SchemaPool) -> Self {
        Self { model, pool, temperature: DEFAULT_TEMPERATURE, max_tokens: DEFAULT_CRITIC_MAX_TOKENS }
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn request(&self, prefix: &Dialogue) -> Result<CompletionRequest, CriticError> {
        Ok(CompletionRequest::new(build_critic_prompt(prefix, &self.pool)?)
            .with_temperature(self.temperature)
            .with_max_tokens(self.max_tokens))
    }
}

impl ModelCritic<HttpModel> {
    pub fn remote(config: EndpointConfig, pool: SchemaPool) -> Result<Self, CriticError> {
        let temperature = config.temperature;
        let max_tokens = config.max_tokens;
        let mut c = Self::new(HttpModel::new(config)?, pool);
        c.temperature = temperature;
        c.max_tokens = max_tokens;
        Ok(c)
    }
}

impl ModelCritic<ReplayModel> {
    pub fn replay(path: &Path, pool: SchemaPool) -> Result<Self, CriticError> {
        Ok(Self::new(ReplayModel::load(path)?, pool))
    }
}

impl<M: TextModel> Critic for ModelCritic<M> {
    fn inspect(&self, prefix: &Dialogue) -> Result<CriticVerdict, CriticError> {
        let text = self.model.complete(&self.request(prefix)?)?;
        Ok(CriticVerdict::lenient(&text))
    }

    fn identity(&self) -> String {
        format!("critic:{}", self.model.identity())
    }
}

/// Words that claim an action was carried out.
const COMPLETION_LEXICON: [&str; 12] = [
    "done",
    "booked",
    "reserved",
    "confirmed",
    "purchased",
    "purchase went through",
    "all set",
    "has been",
    "successfully",
    "completed",
    "is complete",
    "taken care of",
];

fn claims_completion(text: &str) -> bool {
    COMPLETION_LEXICON.iter().any(|w| mentioned(w, text))
}

/// Structural judgement of the last action of `prefix` against `gt`.
///
/// The decision order: identical or plain-vs-plain is no error; a call where
/// the ground truth has none is premature; different tools is a tool
/// prediction error; a required argument off is required-arguments, any
/// other argument off is optional-arguments; a matching call with a
/// different result or response is observation reasoning. A missing call
/// splits into confirmation, hallucination (numbers the ground truth never
/// showed) and hesitation, in that priority.
pub fn oracle_critic(
    prefix: &Dialogue,
    gt: &Dialogue,
    pool: &SchemaPool,
    templates: &Templates,
    threshold: f64,
) -> Result<CriticVerdict, CriticError> {
    let k = prefix.len();
    if k == 0 {
        return Err(CriticError::EmptyPrefix);
    }
    if k > gt.len() {
        return Err(CriticError::PrefixMismatch { turn: k });
    }
    if let Some(i) = (0..k - 1).find(|&i| prefix.turns[i] != gt.turns[i]) {
        return Err(CriticError::PrefixMismatch { turn: i + 1 });
    }
    let (pred, truth) = (&prefix.turns[k - 1], &gt.turns[k - 1]);
    if pred.user != truth.user {
        return Err(CriticError::PrefixMismatch { turn: k });
    }
    let (p, g) = (&pred.assistant, &truth.assistant);
    if p == g {
        return Ok(CriticVerdict::no_error());
    }
    let mut rng = seeded_rng(0, &prefix.id, ErrorCategory::PrematureInvocation, "oracle");
    let mut detected = |c: ErrorCategory, bank: &str, s| {
        let thought = templates.thought(bank, &s, &mut rng);
        Ok(CriticVerdict::detected(c, thought))
    };
    let turn = k.to_string();
    use ErrorCategory as C;
    match (p, g) {
        (AssistantAction::Response { .. }, AssistantAction::Response { .. }) => Ok(CriticVerdict::no_error()),
        (AssistantAction::Tool(pt), AssistantAction::Response { .. }) => {
            let said = prefix.turns[..k].iter().map(|t| t.user.as_str()).collect::<Vec<_>>().join("\n");
            let (required, missing) = match pool.get(&pt.call.tool) {
                Some(schema) => {
                    let missing: Vec<&str> = schema
                        .required_names()
                        .filter(|a| pt.call.args.get(*a).is_none_or(|v| !mentioned(v, &said)))
                        .collect();
                    (quoted_list(schema.required_names()), quoted_and(missing))
                }
                None => (quoted_list(pt.call.args.keys().map(String::as_str)), quoted_and([])),
            };
            let s = slots([("turn", turn), ("tool", pt.call.tool.clone()), ("required", required), ("missing", missing)]);
            detected(C::PrematureInvocation, C::PrematureInvocation.name(), s)
        }
        (AssistantAction::Response { text }, AssistantAction::Tool(gt_turn)) => {
            let s = slots([("turn", turn), ("expected_tool", gt_turn.call.tool.clone())]);
            let mut shown: std::collections::BTreeSet<u64> = numbers_in(&gt_turn.response);
            for v in gt_turn.result.values() {
                shown.extend(numbers_in(v));
            }
            let c = if claims_completion(text) {
                C::NonInvocationConfirmation
            } else if numbers_in(text).iter().any(|n| !shown.contains(n)) {
                C::NonInvocationHallucination
            } else {
                C::NonInvocationHesitation
            };
            detected(c, c.name(), s)
        }
        (AssistantAction::Tool(pt), AssistantAction::Tool(gt_turn)) => {
            let tool_prediction = |s_turn: String| {
                slots([("turn", s_turn), ("tool", pt.call.tool.clone()), ("expected_tool", gt_turn.call.tool.clone())])
            };
            let verdict = match match_tool_call(&pt.call, &gt_turn.call, pool, threshold) {
                Ok(v) => v,
                Err(_) => return detected(C::ToolPrediction, C::ToolPrediction.name(), tool_prediction(turn)),
            };
            if pt.call.tool != gt_turn.call.tool {
                return detected(C::ToolPrediction, C::ToolPrediction.name(), tool_prediction(turn));
            }
            let schema = pool.get(&gt_turn.call.tool).expect("matcher checked the tool");
            let bad: BTreeMap<&String, &ArgMatch> = verdict.per_arg.iter().filter(|(_, m)| !m.is_ok()).collect();
            let value_of = |args: &BTreeMap<String, String>, a: &str| args.get(a).cloned().unwrap_or_default();
            if let Some((arg, _)) = bad.iter().find(|(a, _)| schema.is_required(a)) {
                let s = slots([
                    ("turn", turn),
                    ("tool", pt.call.tool.clone()),
                    ("arg", arg.to_string()),
                    ("value", value_of(&pt.call.args, arg)),
                    ("expected", value_of(&gt_turn.call.args, arg)),
                ]);
                return detected(C::RequiredArguments, C::RequiredArguments.name(), s);
            }
            if let Some((arg, m)) = bad.iter().next() {
                let bank = match m {
                    ArgMatch::Extra => "optional-arguments-add",
                    ArgMatch::Missing => "optional-arguments-drop",
                    _ => "optional-arguments-alter",
                };
                let s = slots([
                    ("turn", turn),
                    ("tool", pt.call.tool.clone()),
                    ("arg", arg.to_string()),
                    ("value", value_of(&pt.call.args, arg)),
                    ("expected", value_of(&gt_turn.call.args, arg)),
                ]);
                return detected(C::OptionalArguments, bank, s);
            }
            if pt.result != gt_turn.result || pt.response != gt_turn.response {
                let s = slots([("turn", turn), ("tool", pt.call.tool.clone())]);
                return detected(C::ObservationReasoning, C::ObservationReasoning.name(), s);
            }
            Ok(CriticVerdict::no_error())
        }
    }
}

/// [`oracle_critic`] behind the [`Critic`] interface. References are looked
/// up by dialogue id; ids of injected dialogues (`source~category~...`) fall
/// back to their source id.
pub struct OracleCritic {
    pool: SchemaPool,
    references: BTreeMap<String, Dialogue>,
    templates: Templates,
    threshold: f64,
}

impl OracleCritic {
    pub fn new<I: IntoIterator<Item = Dialogue>>(pool: SchemaPool, references: I) -> Self {
        Self {
            pool,
            references: references.into_iter().map(|d| (d.id.clone(), d)).collect(),
            templates: Templates::default(),
            threshold: DEFAULT_FUZZY_THRESHOLD,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn reference(&self, id: &str) -> Option<&Dialogue> {
        self.references.get(id).or_else(|| id.split_once('~').and_then(|(src, _)| self.references.get(src)))
    }
}

impl Critic for OracleCritic {
    fn inspect(&self, prefix: &Dialogue) -> Result<CriticVerdict, CriticError> {
        let gt = self.reference(&prefix.id).ok_or_else(|| CriticError::MissingReference(prefix.id.clone()))?;
        oracle_critic(prefix, gt, &self.pool, &self.templates, self.threshold)
    }

    fn identity(&self) -> String {
        format!("critic:oracle#threshold={}", self.threshold)
    }
}

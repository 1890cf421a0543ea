//! Assistants under evaluation and the tool simulator they call.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::dialogue::{parse_call, render_call, render_pool_entry, AssistantAction, Dialogue, SchemaPool, ToolCall, ToolResult};
use crate::endpoint::{CompletionRequest, EndpointError, TextModel, DEFAULT_TEMPERATURE};
use crate::metrics::match_tool_call;

/// What the assistant is being asked to do.
#[derive(Debug, Clone, PartialEq)]
pub enum Phase {
    /// First attempt at the turn.
    Initial,
    /// Second attempt after feedback (critic feedback or the assistant's own
    /// critique).
    Revise { initial: AssistantAction, feedback: String },
}

/// Everything an assistant may look at for one turn.
#[derive(Debug, Clone)]
pub struct AssistantRequest<'a> {
    pub dialogue_id: &'a str,
    pub k: usize,
    /// Ground-truth turns `1..k` and the user's `k`-th message, rendered.
    pub history: &'a str,
    pub user: &'a str,
    pub pool: &'a SchemaPool,
    pub seed: u64,
    pub phase: Phase,
}

/// Executes tool calls made during evaluation.
pub trait ToolExecutor: Sync {
    fn execute(&self, call: &ToolCall) -> ToolResult;
}

/// What the simulator returns for calls that match no ground-truth call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissPolicy {
    /// An empty list of options.
    #[default]
    EmptyList,
    /// An empty single record.
    EmptyRecord,
}

/// Answers a call with the recorded result of the matching ground-truth
/// call: the one at turn `k`, or failing that the first later one that
/// matches. Anything else gets the miss policy's empty result.
pub struct GroundTruthSimulator<'a> {
    pub gt: &'a Dialogue,
    pub k: usize,
    pub pool: &'a SchemaPool,
    pub threshold: f64,
    pub miss: MissPolicy,
}

impl ToolExecutor for GroundTruthSimulator<'_> {
    fn execute(&self, call: &ToolCall) -> ToolResult {
        for turn in self.gt.turns.iter().skip(self.k.saturating_sub(1)) {
            if let Some(t) = turn.assistant.tool_turn() {
                if match_tool_call(call, &t.call, self.pool, self.threshold).is_ok_and(|v| v.matched) {
                    return t.result.clone();
                }
            }
        }
        match self.miss {
            MissPolicy::EmptyList => ToolResult::empty(),
            MissPolicy::EmptyRecord => ToolResult::Single(BTreeMap::new()),
        }
    }
}

pub trait Assistant: Send + Sync {
    /// Produces the assistant's action for the turn (initial or revised).
    fn act(&self, request: &AssistantRequest<'_>, tools: &dyn ToolExecutor) -> Result<AssistantAction, EndpointError>;

    /// Reviews its own `initial` action; used by self-correction.
    fn critique(&self, request: &AssistantRequest<'_>, initial: &AssistantAction) -> Result<String, EndpointError>;

    fn identity(&self) -> String;
}

impl<T: Assistant + ?Sized> Assistant for &T {
    fn act(&self, request: &AssistantRequest<'_>, tools: &dyn ToolExecutor) -> Result<AssistantAction, EndpointError> {
        (**self).act(request, tools)
    }

    fn critique(&self, request: &AssistantRequest<'_>, initial: &AssistantAction) -> Result<String, EndpointError> {
        (**self).critique(request, initial)
    }

    fn identity(&self) -> String {
        (**self).identity()
    }
}

impl<T: Assistant + ?Sized> Assistant for Box<T> {
    fn act(&self, request: &AssistantRequest<'_>, tools: &dyn ToolExecutor) -> Result<AssistantAction, EndpointError> {
        (**self).act(request, tools)
    }

    fn critique(&self, request: &AssistantRequest<'_>, initial: &AssistantAction) -> Result<String, EndpointError> {
        (**self).critique(request, initial)
    }

    fn identity(&self) -> String {
        (**self).identity()
    }
}

/// What a scripted assistant does when asked to revise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RevisePolicy {
    /// Answer with the ground-truth action.
    GroundTruth,
    /// Repeat the initial action.
    KeepInitial,
}

/// The critique a scripted assistant gives when its action matches the
/// ground truth.
pub const NO_ISSUES: &str = "No issues found.";

/// Replays ground-truth actions, except at overridden `(dialogue, turn)`
/// positions where it plays a given (usually wrong) action.
pub struct ScriptedAssistant {
    references: BTreeMap<String, Dialogue>,
    overrides: BTreeMap<(String, usize), AssistantAction>,
    revise: RevisePolicy,
    name: String,
}

impl ScriptedAssistant {
    pub fn new<I: IntoIterator<Item = Dialogue>>(name: impl Into<String>, references: I) -> Self {
        Self {
            references: references.into_iter().map(|d| (d.id.clone(), d)).collect(),
            overrides: BTreeMap::new(),
            revise: RevisePolicy::GroundTruth,
            name: name.into(),
        }
    }

    pub fn with_override(mut self, dialogue_id: impl Into<String>, k: usize, action: AssistantAction) -> Self {
        self.overrides.insert((dialogue_id.into(), k), action);
        self
    }

    pub fn with_revise_policy(mut self, policy: RevisePolicy) -> Self {
        self.revise = policy;
        self
    }

    fn truth(&self, id: &str, k: usize) -> Result<&AssistantAction, EndpointError> {
        self.references
            .get(id)
            .and_then(|d| d.turn(k))
            .map(|t| &t.assistant)
            .ok_or_else(|| EndpointError::Malformed(format!("no scripted turn {k} for `{id}`")))
    }
}

impl Assistant for ScriptedAssistant {
    fn act(&self, request: &AssistantRequest<'_>, _tools: &dyn ToolExecutor) -> Result<AssistantAction, EndpointError> {
        let truth = self.truth(request.dialogue_id, request.k)?;
        match &request.phase {
            Phase::Initial => {
                Ok(self.overrides.get(&(request.dialogue_id.to_string(), request.k)).unwrap_or(truth).clone())
            }
            Phase::Revise { initial, .. } => Ok(match self.revise {
                RevisePolicy::GroundTruth => truth.clone(),
                RevisePolicy::KeepInitial => initial.clone(),
            }),
        }
    }

    fn critique(&self, request: &AssistantRequest<'_>, initial: &AssistantAction) -> Result<String, EndpointError> {
        let truth = self.truth(request.dialogue_id, request.k)?;
        Ok(if initial == truth { NO_ISSUES.to_string() } else { "The response does not do what the user asked.".to_string() })
    }

    fn identity(&self) -> String {
        format!("scripted:{}", self.name)
    }
}

/// Counts calls into another assistant.
pub struct Counting<A> {
    pub inner: A,
    acts: AtomicU64,
    critiques: AtomicU64,
}

impl<A> Counting<A> {
    pub fn new(inner: A) -> Self {
        Self { inner, acts: AtomicU64::new(0), critiques: AtomicU64::new(0) }
    }

    pub fn acts(&self) -> u64 {
        self.acts.load(Ordering::SeqCst)
    }

    pub fn critiques(&self) -> u64 {
        self.critiques.load(Ordering::SeqCst)
    }
}

impl<A: Assistant> Assistant for Counting<A> {
    fn act(&self, request: &AssistantRequest<'_>, tools: &dyn ToolExecutor) -> Result<AssistantAction, EndpointError> {
        self.acts.fetch_add(1, Ordering::SeqCst);
        self.inner.act(request, tools)
    }

    fn critique(&self, request: &AssistantRequest<'_>, initial: &AssistantAction) -> Result<String, EndpointError> {
        self.critiques.fetch_add(1, Ordering::SeqCst);
        self.inner.critique(request, initial)
    }

    fn identity(&self) -> String {
        self.inner.identity()
    }
}

const ASSISTANT_SYSTEM: &str = "You are a helpful assistant that serves the user with the tools listed below. \
Reply to the user's last message. If a tool is needed and you have every required argument, reply with exactly \
one line of the form:\nAPI CALL: ToolName(arg1='value', arg2='value')\nOtherwise reply with the message for the \
user, prefixed by \"RESPONSE: \". Ask the user for missing required information instead of guessing it.";

const OBSERVE_INSTRUCTION: &str = "The tool returned the result above. Write your reply to the user, prefixed by \"RESPONSE: \".";

const CRITIQUE_INSTRUCTION: &str = "Review your reply above against the tool descriptions and the conversation. \
Point out any mistake: a wrong or premature tool call, wrong or missing arguments, a reply that misreads the \
tool result, or a missing tool call. If there is nothing wrong, answer exactly \"No issues found.\"";

const SELF_REVISE_INSTRUCTION: &str = "Using your review, write your final reply to the user's last message in the \
same format as before. If the review found no issues, repeat your original reply exactly.";

/// How an action is shown back to the model that produced it.
pub fn render_action(action: &AssistantAction) -> String {
    match action {
        AssistantAction::Response { text } => format!("RESPONSE: {text}"),
        AssistantAction::Tool(t) => {
            let result = match &t.result {
                ToolResult::Single(row) => serde_json::to_string(row).expect("row serializes"),
                ToolResult::Rows(rows) => serde_json::to_string(rows).expect("rows serialize"),
            };
            format!("API CALL: {}\nRESULT: {result}\nRESPONSE: {}", render_call(&t.call), t.response)
        }
    }
}

/// What a model said it wants to do.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelReply {
    Call(ToolCall),
    Text(String),
}

/// Reads `API CALL: ...` (anywhere in the text) or a `RESPONSE:` reply.
/// Anything else is taken as a plain reply to the user.
pub fn parse_model_reply(text: &str) -> ModelReply {
    for line in text.lines() {
        let line = line.trim().trim_start_matches("- ");
        if let Some(rest) = line.strip_prefix("API CALL:") {
            if let Ok(call) = parse_call(rest.trim()) {
                return ModelReply::Call(call);
            }
        }
    }
    let t = text.trim();
    let t = t.find("RESPONSE:").map_or(t, |i| t[i + "RESPONSE:".len()..].trim());
    ModelReply::Text(t.trim_matches('"').to_string())
}

/// An assistant backed by a text model. A tool-calling step costs a second
/// request, made after the simulator returns the tool result, to obtain the
/// reply the user sees.
pub struct ModelAssistant<M> {
    model: M,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl<M: TextModel> ModelAssistant<M> {
    pub fn new(model: M) -> Self {
        Self { model, temperature: DEFAULT_TEMPERATURE, max_tokens: 512 }
    }

    fn base_prompt(&self, request: &AssistantRequest<'_>) -> String {
        let tools: Vec<String> = request.pool.iter().map(render_pool_entry).collect();
        format!("Available tools:\n{}\nConversation:\n{}", tools.join(""), request.history)
    }

    fn ask(&self, prompt: String, seed: u64) -> Result<String, EndpointError> {
        let req = CompletionRequest::new(prompt)
            .with_system(ASSISTANT_SYSTEM)
            .with_temperature(self.temperature)
            .with_max_tokens(self.max_tokens)
            .with_sample(seed);
        self.model.complete(&req)
    }
}

impl<M: TextModel> Assistant for ModelAssistant<M> {
    fn act(&self, request: &AssistantRequest<'_>, tools: &dyn ToolExecutor) -> Result<AssistantAction, EndpointError> {
        let mut prompt = self.base_prompt(request);
        if let Phase::Revise { initial, feedback } = &request.phase {
            prompt.push_str(&format!("\nYour previous reply:\n{}\n\n{feedback}\n", render_action(initial)));
        }
        prompt.push_str("\nASSISTANT:");
        let first = self.ask(prompt.clone(), request.seed)?;
        match parse_model_reply(&first) {
            ModelReply::Text(text) => Ok(AssistantAction::response(text)),
            ModelReply::Call(call) => {
                let result = tools.execute(&call);
                let shown = render_action(&AssistantAction::tool(call.clone(), result.clone(), ""));
                let shown = shown.trim_end_matches("\nRESPONSE: ");
                let follow = format!("{prompt}\n{shown}\n\n{OBSERVE_INSTRUCTION}\nASSISTANT:");
                let reply = match parse_model_reply(&self.ask(follow, request.seed)?) {
                    ModelReply::Text(t) => t,
                    ModelReply::Call(_) => String::new(),
                };
                Ok(AssistantAction::tool(call, result, reply))
            }
        }
    }

    fn critique(&self, request: &AssistantRequest<'_>, initial: &AssistantAction) -> Result<String, EndpointError> {
        let prompt = format!(
            "{}\nYour reply:\n{}\n\n{CRITIQUE_INSTRUCTION}\n",
            self.base_prompt(request),
            render_action(initial)
        );
        Ok(self.ask(prompt, request.seed)?.trim().to_string())
    }

    fn identity(&self) -> String {
        format!("assistant:{}#t={}", self.model.identity(), self.temperature)
    }
}

/// Wraps a self-critique into the feedback shown for the revision.
pub fn self_revision_message(critique: &str) -> String {
    format!("Your review of that reply:\n{critique}\n\n{SELF_REVISE_INSTRUCTION}")
}

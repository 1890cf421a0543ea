//! Schema-guided tool-calling dialogues.
//!
//! A [`Dialogue`] is an ordered list of user/assistant [`Turn`]s. An assistant
//! turn is either a plain response or a single tool invocation together with
//! the tool's result and the response the assistant gave after observing it.
//! Tool schemas live in a [`SchemaPool`]; they are never stored per
//! turn, so the echo block that the text format repeats after every call is
//! always regenerated from the pool.

mod text;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use text::{parse_call, parse_dialogue, parse_turn, render_call, render_dialogue, render_pool_entry, render_turn, teacher_forced_context};
pub use validate::{validate, validate_pool, Violation, ViolationKind};

/// Errors raised while parsing or rendering dialogue text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DialogueError {
    #[error("line {line}: expected {expected}")]
    Syntax { line: usize, expected: String },
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
    #[error("schema echo for `{tool}` disagrees with the pool: {detail}")]
    SchemaMismatch { tool: String, detail: String },
    #[error("turn index {upto} out of range for a dialogue of {len} turns")]
    IndexOutOfRange { upto: usize, len: usize },
}

impl DialogueError {
    pub(crate) fn syntax(line: usize, expected: impl Into<String>) -> Self {
        DialogueError::Syntax { line, expected: expected.into() }
    }
}

/// One argument of a tool schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolArgSpec {
    pub name: String,
    pub description: String,
    #[serde(default)]
    pub is_categorical: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub possible_values: Vec<String>,
}

impl ToolArgSpec {
    pub fn free(name: impl Into<String>, description: impl Into<String>) -> Self {
        Self { name: name.into(), description: description.into(), is_categorical: false, possible_values: Vec::new() }
    }

    pub fn categorical<I, S>(name: impl Into<String>, description: impl Into<String>, values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            name: name.into(),
            description: description.into(),
            is_categorical: true,
            possible_values: values.into_iter().map(Into::into).collect(),
        }
    }
}

/// A tool schema: required and optional arguments, and whether calling
/// it changes something in the world (bookings, purchases) or only reads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSchema {
    pub name: String,
    pub description: String,
    #[serde(default)]
    pub required: Vec<ToolArgSpec>,
    #[serde(default)]
    pub optional: Vec<ToolArgSpec>,
    #[serde(default)]
    pub is_action: bool,
    /// Grouping used to pick plausible substitute tools.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
}

impl ToolSchema {
    pub fn arg(&self, name: &str) -> Option<&ToolArgSpec> {
        self.required.iter().chain(&self.optional).find(|a| a.name == name)
    }

    pub fn is_required(&self, name: &str) -> bool {
        self.required.iter().any(|a| a.name == name)
    }

    pub fn is_optional(&self, name: &str) -> bool {
        self.optional.iter().any(|a| a.name == name)
    }

    pub fn required_names(&self) -> impl Iterator<Item = &str> {
        self.required.iter().map(|a| a.name.as_str())
    }
}

/// All tools available to the assistant, keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ToolSchema>", into = "Vec<ToolSchema>")]
pub struct SchemaPool {
    schemas: BTreeMap<String, ToolSchema>,
}

impl SchemaPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a schema, replacing any previous schema of the same name.
    pub fn insert(&mut self, schema: ToolSchema) -> Option<ToolSchema> {
        self.schemas.insert(schema.name.clone(), schema)
    }

    pub fn get(&self, name: &str) -> Option<&ToolSchema> {
        self.schemas.get(name)
    }

    pub fn lookup(&self, name: &str) -> Result<&ToolSchema, DialogueError> {
        self.get(name).ok_or_else(|| DialogueError::UnknownTool(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &ToolSchema> {
        self.schemas.values()
    }

    pub fn len(&self) -> usize {
        self.schemas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schemas.is_empty()
    }
}

impl TryFrom<Vec<ToolSchema>> for SchemaPool {
    type Error = String;

    fn try_from(list: Vec<ToolSchema>) -> Result<Self, Self::Error> {
        let mut pool = SchemaPool::new();
        for schema in list {
            let name = schema.name.clone();
            if pool.insert(schema).is_some() {
                return Err(format!("duplicate tool `{name}` in schema pool"));
            }
        }
        Ok(pool)
    }
}

impl From<SchemaPool> for Vec<ToolSchema> {
    fn from(pool: SchemaPool) -> Self {
        pool.schemas.into_values().collect()
    }
}

impl FromIterator<ToolSchema> for SchemaPool {
    fn from_iter<I: IntoIterator<Item = ToolSchema>>(iter: I) -> Self {
        let mut pool = SchemaPool::new();
        for s in iter {
            pool.insert(s);
        }
        pool
    }
}

/// A single tool invocation. Argument values are kept as text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ToolCall {
    pub tool: String,
    #[serde(default)]
    pub args: BTreeMap<String, String>,
}

impl ToolCall {
    pub fn new(tool: impl Into<String>) -> Self {
        Self { tool: tool.into(), args: BTreeMap::new() }
    }

    pub fn arg(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.args.insert(name.into(), value.into());
        self
    }
}

impl fmt::Display for ToolCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_call(self))
    }
}

pub type ResultRow = BTreeMap<String, String>;

/// Output of a tool: a list of option rows for searches, a single record for
/// actions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolResult {
    Rows(Vec<ResultRow>),
    Single(ResultRow),
}

impl ToolResult {
    pub fn empty() -> Self {
        ToolResult::Rows(Vec::new())
    }

    pub fn rows(&self) -> Vec<&ResultRow> {
        match self {
            ToolResult::Rows(rows) => rows.iter().collect(),
            ToolResult::Single(row) => vec![row],
        }
    }

    /// Every value of every row, in row order.
    pub fn values(&self) -> impl Iterator<Item = &str> {
        self.rows().into_iter().flat_map(|r| r.values().map(String::as_str)).collect::<Vec<_>>().into_iter()
    }
}

/// An assistant turn that invoked a tool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolTurn {
    pub call: ToolCall,
    pub result: ToolResult,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AssistantAction {
    Response { text: String },
    Tool(ToolTurn),
}

impl AssistantAction {
    pub fn response(text: impl Into<String>) -> Self {
        AssistantAction::Response { text: text.into() }
    }

    pub fn tool(call: ToolCall, result: ToolResult, response: impl Into<String>) -> Self {
        AssistantAction::Tool(ToolTurn { call, result, response: response.into() })
    }

    pub fn call(&self) -> Option<&ToolCall> {
        match self {
            AssistantAction::Tool(t) => Some(&t.call),
            AssistantAction::Response { .. } => None,
        }
    }

    pub fn tool_turn(&self) -> Option<&ToolTurn> {
        match self {
            AssistantAction::Tool(t) => Some(t),
            AssistantAction::Response { .. } => None,
        }
    }

    /// The text shown to the user.
    pub fn text(&self) -> &str {
        match self {
            AssistantAction::Tool(t) => &t.response,
            AssistantAction::Response { text } => text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    /// 1-based position in the dialogue.
    pub index: usize,
    pub user: String,
    pub assistant: AssistantAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialogue {
    pub id: String,
    pub turns: Vec<Turn>,
}

impl Dialogue {
    /// Builds a dialogue from `(user, assistant)` pairs, numbering turns from 1.
    pub fn from_pairs<I, S>(id: impl Into<String>, pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, AssistantAction)>,
        S: Into<String>,
    {
        let turns = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (user, assistant))| Turn { index: i + 1, user: user.into(), assistant })
            .collect();
        Self { id: id.into(), turns }
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    /// Turn `k` (1-based).
    pub fn turn(&self, k: usize) -> Option<&Turn> {
        k.checked_sub(1).and_then(|i| self.turns.get(i))
    }

    /// The sub-dialogue made of turns `1..=k`.
    pub fn prefix(&self, k: usize) -> Result<Dialogue, DialogueError> {
        if k == 0 || k > self.len() {
            return Err(DialogueError::IndexOutOfRange { upto: k, len: self.len() });
        }
        Ok(Dialogue { id: self.id.clone(), turns: self.turns[..k].to_vec() })
    }

    /// Indices of turns whose assistant invoked a tool.
    pub fn tool_turn_indices(&self) -> Vec<usize> {
        self.turns.iter().filter(|t| t.assistant.call().is_some()).map(|t| t.index).collect()
    }

    pub fn last(&self) -> Option<&Turn> {
        self.turns.last()
    }
}

/// Reads a JSON array or JSONL stream of dialogues.
pub fn read_corpus(text: &str) -> Result<Vec<Dialogue>, serde_json::Error> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed);
    }
    trimmed.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

/// Writes dialogues as JSONL, one object per line.
pub fn write_corpus_jsonl(dialogues: &[Dialogue]) -> String {
    let mut out = String::new();
    for d in dialogues {
        out.push_str(&serde_json::to_string(d).expect("dialogue serializes"));
        out.push('\n');
    }
    out
}

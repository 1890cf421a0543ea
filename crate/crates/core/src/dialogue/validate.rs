use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Dialogue, SchemaPool, ToolResult};

/// A broken invariant. Violations are data: callers decide whether to reject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Turn the violation belongs to; `None` for dialogue- or pool-level rules.
    pub turn: Option<usize>,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ViolationKind {
    EmptyDialogue,
    TurnIndex { expected: usize, found: usize },
    UnknownTool { tool: String },
    UnknownArg { tool: String, arg: String },
    MissingRequiredArg { tool: String, arg: String },
    CategoricalValueViolation { tool: String, arg: String, value: String },
    EmptyResultKey,
    CategoricalSpec { tool: String, arg: String },
    DuplicateArg { tool: String, arg: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(t) = self.turn {
            write!(f, "turn {t}: ")?;
        }
        match &self.kind {
            ViolationKind::EmptyDialogue => write!(f, "dialogue has no turns"),
            ViolationKind::TurnIndex { expected, found } => write!(f, "turn index {found}, expected {expected}"),
            ViolationKind::UnknownTool { tool } => write!(f, "unknown tool `{tool}`"),
            ViolationKind::UnknownArg { tool, arg } => write!(f, "`{tool}` has no argument `{arg}`"),
            ViolationKind::MissingRequiredArg { tool, arg } => write!(f, "`{tool}` call lacks required `{arg}`"),
            ViolationKind::CategoricalValueViolation { tool, arg, value } => {
                write!(f, "`{tool}.{arg}` = {value:?} is not an allowed value")
            }
            ViolationKind::EmptyResultKey => write!(f, "result record with an empty key"),
            ViolationKind::CategoricalSpec { tool, arg } => {
                write!(f, "`{tool}.{arg}`: possible values must be listed iff categorical")
            }
            ViolationKind::DuplicateArg { tool, arg } => write!(f, "`{tool}` declares `{arg}` twice"),
        }
    }
}

fn at(turn: usize, kind: ViolationKind) -> Violation {
    Violation { turn: Some(turn), kind }
}

/// Checks a dialogue against its own structural invariants and the pool.
pub fn validate(d: &Dialogue, pool: &SchemaPool) -> Vec<Violation> {
    let mut out = Vec::new();
    if d.turns.is_empty() {
        out.push(Violation { turn: None, kind: ViolationKind::EmptyDialogue });
    }
    for (i, turn) in d.turns.iter().enumerate() {
        if turn.index != i + 1 {
            out.push(at(i + 1, ViolationKind::TurnIndex { expected: i + 1, found: turn.index }));
        }
        let Some(t) = turn.assistant.tool_turn() else { continue };
        let k = i + 1;
        let tool = &t.call.tool;
        let Some(schema) = pool.get(tool) else {
            out.push(at(k, ViolationKind::UnknownTool { tool: tool.clone() }));
            continue;
        };
        for arg in schema.required_names() {
            if !t.call.args.contains_key(arg) {
                out.push(at(k, ViolationKind::MissingRequiredArg { tool: tool.clone(), arg: arg.to_string() }));
            }
        }
        for (name, value) in &t.call.args {
            match schema.arg(name) {
                None => out.push(at(k, ViolationKind::UnknownArg { tool: tool.clone(), arg: name.clone() })),
                Some(spec) if spec.is_categorical && !spec.possible_values.contains(value) => {
                    out.push(at(
                        k,
                        ViolationKind::CategoricalValueViolation { tool: tool.clone(), arg: name.clone(), value: value.clone() },
                    ));
                }
                Some(_) => {}
            }
        }
        let rows = match &t.result {
            ToolResult::Rows(rows) => rows.iter().collect::<Vec<_>>(),
            ToolResult::Single(row) => vec![row],
        };
        if rows.iter().any(|r| r.keys().any(|k| k.is_empty())) {
            out.push(at(k, ViolationKind::EmptyResultKey));
        }
    }
    out
}

/// Checks per-schema invariants: unique argument names and the
/// categorical/possible-values pairing.
pub fn validate_pool(pool: &SchemaPool) -> Vec<Violation> {
    let mut out = Vec::new();
    for schema in pool.iter() {
        let mut seen = BTreeSet::new();
        for spec in schema.required.iter().chain(&schema.optional) {
            if !seen.insert(spec.name.as_str()) {
                out.push(Violation {
                    turn: None,
                    kind: ViolationKind::DuplicateArg { tool: schema.name.clone(), arg: spec.name.clone() },
                });
            }
            if spec.is_categorical == spec.possible_values.is_empty() {
                out.push(Violation {
                    turn: None,
                    kind: ViolationKind::CategoricalSpec { tool: schema.name.clone(), arg: spec.name.clone() },
                });
            }
        }
    }
    out
}

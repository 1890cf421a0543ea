//! Error-injected tool-calling dialogue datasets, critic-in-the-loop
//! evaluation and tool-usage metrics.

pub mod category;
pub mod critic;
pub mod dataset;
pub mod dialogue;
pub mod endpoint;
pub mod harness;
pub mod injector;
pub mod metrics;
pub mod review;
pub mod synth;

pub use category::ErrorCategory;
pub use critic::{CriticVerdict, Verdict};
pub use dataset::{Label, LabeledDialogue, RolloutDatapoint};
pub use dialogue::{AssistantAction, Dialogue, SchemaPool, ToolCall, ToolResult, ToolSchema, ToolTurn, Turn};
pub use harness::{Scenario, TurnRecord};
pub use injector::{InjectedDialogue, InjectionProvenance};
pub use metrics::{DetectionScore, DialogueScore, MatchVerdict};

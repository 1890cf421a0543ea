//! Teacher-forced, turn-level evaluation with one round of feedback.
//!
//! At every turn the assistant sees the ground-truth history and the user's
//! message, never its own earlier outputs. Depending on the [`Scenario`],
//! its first answer is kept, reviewed by itself, or reviewed by a critic; a
//! detected error earns exactly one revision, which is final.

mod assistant;
mod run;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::critic::{Critic, CriticError, CriticVerdict, Verdict};
use crate::dialogue::{teacher_forced_context, AssistantAction, Dialogue, DialogueError, SchemaPool, Turn};
use crate::endpoint::EndpointError;
use crate::metrics::{MetricsError, DEFAULT_FUZZY_THRESHOLD};

pub use assistant::{
    parse_model_reply, render_action, self_revision_message, Assistant, AssistantRequest, Counting, GroundTruthSimulator,
    MissPolicy, ModelAssistant, ModelReply, Phase, RevisePolicy, ScriptedAssistant, ToolExecutor, NO_ISSUES,
};
pub use run::{corpus_hash, read_report, run_corpus, run_dialogue, DialogueRun, RunManifest, RunOptions, RunReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Baseline,
    SelfCorrection,
    ErrorOnlyFeedback,
    FullFeedback,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::Baseline, Scenario::SelfCorrection, Scenario::ErrorOnlyFeedback, Scenario::FullFeedback];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Baseline => "baseline",
            Scenario::SelfCorrection => "self-correction",
            Scenario::ErrorOnlyFeedback => "error-only-feedback",
            Scenario::FullFeedback => "full-feedback",
        }
    }

    pub fn uses_critic(self) -> bool {
        matches!(self, Scenario::ErrorOnlyFeedback | Scenario::FullFeedback)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|c| c.name() == s.trim().to_ascii_lowercase().replace('_', "-"))
            .ok_or_else(|| format!("unknown scenario `{s}` (expected one of baseline, self-correction, error-only-feedback, full-feedback)"))
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{dialogue} turn {turn}: assistant endpoint: {source}")]
    Assistant { dialogue: String, turn: usize, source: EndpointError },
    #[error("{dialogue} turn {turn}: critic: {source}")]
    Critic { dialogue: String, turn: usize, source: CriticError },
    #[error("scenario {0} needs a critic")]
    MissingCritic(Scenario),
    #[error("turn {k} out of range for `{dialogue}`")]
    TurnOutOfRange { dialogue: String, k: usize },
    #[error("existing run file {path} belongs to a different run: {detail}")]
    ManifestMismatch { path: String, detail: String },
    #[error("run file {path}: {detail}")]
    Corrupt { path: String, detail: String },
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

const REVISION_TEMPLATE: &str = "A reviewer checked your reply and found a problem.\n\
Error type: {title}\n\
Definition: {definition}\n\
{reasoning}Revise your reply to the user's last message so that it fixes this problem.";

/// Feedback text for a detected error. Full feedback carries the critic's
/// reasoning; error-only feedback carries just the category definition.
pub fn build_feedback_message(verdict: &CriticVerdict, scenario: Scenario) -> Option<String> {
    let Verdict::Detected { category, thought } = &verdict.verdict else { return None };
    let reasoning = match scenario {
        Scenario::FullFeedback => format!("Reasoning: {}\n", thought.trim()),
        _ => String::new(),
    };
    Some(
        REVISION_TEMPLATE
            .replace("{title}", category.title())
            .replace("{definition}", category.description())
            .replace("{reasoning}", &reasoning),
    )
}

/// What happened at one turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub k: usize,
    pub initial: AssistantAction,
    /// `None` when no critic was consulted.
    pub verdict: Option<CriticVerdict>,
    /// Feedback shown for the revision (or the self-critique).
    pub feedback: Option<String>,
    pub revised: Option<AssistantAction>,
    #[serde(rename = "final")]
    pub final_action: AssistantAction,
    pub assistant_calls: u32,
    pub critic_calls: u32,
}

#[derive(Debug, Clone, Copy)]
pub struct TurnSettings {
    pub threshold: f64,
    pub miss: MissPolicy,
    pub seed: u64,
}

impl Default for TurnSettings {
    fn default() -> Self {
        Self { threshold: DEFAULT_FUZZY_THRESHOLD, miss: MissPolicy::default(), seed: 0 }
    }
}

/// Runs turn `k` of `gt` under `scenario`.
pub fn run_turn(
    gt: &Dialogue,
    k: usize,
    pool: &SchemaPool,
    assistant: &dyn Assistant,
    critic: Option<&dyn Critic>,
    scenario: Scenario,
    settings: &TurnSettings,
) -> Result<TurnRecord, HarnessError> {
    let turn = gt.turn(k).ok_or_else(|| HarnessError::TurnOutOfRange { dialogue: gt.id.clone(), k })?;
    let history = teacher_forced_context(gt, k, pool)?;
    let sim = GroundTruthSimulator { gt, k, pool, threshold: settings.threshold, miss: settings.miss };
    let a_err = |source| HarnessError::Assistant { dialogue: gt.id.clone(), turn: k, source };
    let mut request = AssistantRequest {
        dialogue_id: &gt.id,
        k,
        history: &history,
        user: &turn.user,
        pool,
        seed: settings.seed,
        phase: Phase::Initial,
    };
    let initial = assistant.act(&request, &sim).map_err(a_err)?;
    let mut record = TurnRecord {
        k,
        initial: initial.clone(),
        verdict: None,
        feedback: None,
        revised: None,
        final_action: initial.clone(),
        assistant_calls: 1,
        critic_calls: 0,
    };
    match scenario {
        Scenario::Baseline => {}
        Scenario::SelfCorrection => {
            let critique = assistant.critique(&request, &initial).map_err(a_err)?;
            request.phase = Phase::Revise { initial: initial.clone(), feedback: self_revision_message(&critique) };
            let revised = assistant.act(&request, &sim).map_err(a_err)?;
            record.assistant_calls += 2;
            record.feedback = Some(critique);
            record.final_action = revised.clone();
            record.revised = Some(revised);
        }
        Scenario::ErrorOnlyFeedback | Scenario::FullFeedback => {
            let critic = critic.ok_or(HarnessError::MissingCritic(scenario))?;
            let mut turns = gt.turns[..k - 1].to_vec();
            turns.push(Turn { index: k, user: turn.user.clone(), assistant: initial.clone() });
            let candidate = Dialogue { id: gt.id.clone(), turns };
            let verdict = critic
                .inspect(&candidate)
                .map_err(|source| HarnessError::Critic { dialogue: gt.id.clone(), turn: k, source })?;
            record.critic_calls = 1;
            if let Some(feedback) = build_feedback_message(&verdict, scenario) {
                request.phase = Phase::Revise { initial: initial.clone(), feedback: feedback.clone() };
                let revised = assistant.act(&request, &sim).map_err(a_err)?;
                record.assistant_calls += 1;
                record.feedback = Some(feedback);
                record.final_action = revised.clone();
                record.revised = Some(revised);
            }
            record.verdict = Some(verdict);
        }
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::ErrorCategory;

    #[test]
    fn feedback_variants() {
        let v = CriticVerdict::detected(ErrorCategory::PrematureInvocation, "The user never said when.");
        let full = build_feedback_message(&v, Scenario::FullFeedback).unwrap();
        let only = build_feedback_message(&v, Scenario::ErrorOnlyFeedback).unwrap();
        assert!(full.contains("The user never said when."));
        assert!(!only.contains("The user never said when."));
        for m in [&full, &only] {
            assert!(m.contains("calls a tool before gathering all necessary information"));
        }
        assert!(build_feedback_message(&CriticVerdict::no_error(), Scenario::FullFeedback).is_none());
    }

    #[test]
    fn scenario_names() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert_eq!("full_feedback".parse::<Scenario>().unwrap(), Scenario::FullFeedback);
    }
}

//! Dialogue-level tool-call metrics.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::matching::match_tool_call;
use super::MetricsError;
use crate::dialogue::{AssistantAction, Dialogue, SchemaPool};

pub type Rate = Ratio<u64>;

/// Raw tallies behind a [`DialogueScore`]; summing them across dialogues gives
/// corpus-level (micro-averaged) rates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    pub predicted: u64,
    pub matched_predicted: u64,
    pub ground_truth: u64,
    pub matched_ground_truth: u64,
    pub predicted_actions: u64,
    pub unmatched_predicted_actions: u64,
}

impl CallCounts {
    pub fn add(&mut self, o: &CallCounts) {
        self.predicted += o.predicted;
        self.matched_predicted += o.matched_predicted;
        self.ground_truth += o.ground_truth;
        self.matched_ground_truth += o.matched_ground_truth;
        self.predicted_actions += o.predicted_actions;
        self.unmatched_predicted_actions += o.unmatched_predicted_actions;
    }

    /// Matched predictions over predictions; no predictions counts as 1.
    pub fn precision(&self) -> Rate {
        ratio_or(self.matched_predicted, self.predicted, 1)
    }

    /// Matched ground-truth calls over ground-truth calls; none counts as 1.
    pub fn recall(&self) -> Rate {
        ratio_or(self.matched_ground_truth, self.ground_truth, 1)
    }

    /// Unmatched action calls over predicted action calls; none counts as 0.
    pub fn incorrect_action_rate(&self) -> Rate {
        ratio_or(self.unmatched_predicted_actions, self.predicted_actions, 0)
    }

    pub fn success(&self) -> bool {
        self.matched_ground_truth == self.ground_truth && self.unmatched_predicted_actions == 0
    }
}

fn ratio_or(num: u64, den: u64, empty: u64) -> Rate {
    if den == 0 {
        Ratio::from_integer(empty)
    } else {
        Ratio::new(num, den)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueScore {
    pub counts: CallCounts,
    pub precision: Rate,
    pub recall: Rate,
    pub incorrect_action_rate: Rate,
    pub success: Rate,
}

impl DialogueScore {
    pub fn from_counts(counts: CallCounts) -> Self {
        Self {
            precision: counts.precision(),
            recall: counts.recall(),
            incorrect_action_rate: counts.incorrect_action_rate(),
            success: Ratio::from_integer(u64::from(counts.success())),
            counts,
        }
    }

    pub fn is_success(&self) -> bool {
        self.counts.success()
    }
}

/// Scores the final assistant action of every turn against the ground truth.
///
/// Calls are aligned by turn. A predicted call to a tool missing from the pool
/// never matches and is treated as an action call, since its side effects
/// cannot be ruled out.
pub fn dialogue_metrics(finals: &[AssistantAction], gt: &Dialogue, pool: &SchemaPool, threshold: f64) -> Result<DialogueScore, MetricsError> {
    if finals.len() != gt.len() {
        return Err(MetricsError::Alignment { predicted: finals.len(), ground_truth: gt.len() });
    }
    let mut c = CallCounts::default();
    for (pred, turn) in finals.iter().zip(&gt.turns) {
        let gt_call = turn.assistant.call();
        let pred_call = pred.call();
        if gt_call.is_some() {
            c.ground_truth += 1;
        }
        let Some(p) = pred_call else { continue };
        c.predicted += 1;
        let known = pool.get(&p.tool);
        let matched = match (known, gt_call) {
            (Some(_), Some(g)) => match_tool_call(p, g, pool, threshold)?.matched,
            _ => false,
        };
        if matched {
            c.matched_predicted += 1;
            c.matched_ground_truth += 1;
        }
        if known.is_none_or(|s| s.is_action) {
            c.predicted_actions += 1;
            if !matched {
                c.unmatched_predicted_actions += 1;
            }
        }
    }
    Ok(DialogueScore::from_counts(c))
}

pub fn rate_f64(r: &Rate) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

//! Tool-call matching, dialogue metrics, critic detection scores, ROUGE-L and
//! report aggregation.

mod aggregate;
mod detection;
mod fuzzy;
mod matching;
mod rouge;
mod scores;

use thiserror::Error;

pub use aggregate::{aggregate, profile_percentages, MeanStd, RunMetrics, ScenarioSummary, Summary, METRIC_NAMES};
pub use detection::{confusion_labels, detection_metrics, rates_from_confusion, DetectionScore, NO_ERROR_INDEX};
pub use fuzzy::{fuzzy_score, levenshtein, normalize};
pub use matching::{match_tool_call, ArgMatch, MatchVerdict, DEFAULT_FUZZY_THRESHOLD};
pub use rouge::{lcs_len, rouge_from_counts, rouge_l, rouge_tokens, RougeScore, ROUGE_VARIANT};
pub use scores::{dialogue_metrics, rate_f64, CallCounts, DialogueScore, Rate};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
    #[error("{predicted} predicted turns for a {ground_truth}-turn dialogue")]
    Alignment { predicted: usize, ground_truth: usize },
    #[error("{predicted} verdicts for {truth} labels")]
    LengthMismatch { predicted: usize, truth: usize },
}

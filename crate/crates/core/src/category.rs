//! The eight tool-usage error categories.
//!
//! Every place that prints or recognises a category name (prompts, labels,
//! the verdict parser, reports) goes through this registry.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCategory {
    PrematureInvocation,
    ToolPrediction,
    RequiredArguments,
    OptionalArguments,
    ObservationReasoning,
    NonInvocationConfirmation,
    NonInvocationHesitation,
    NonInvocationHallucination,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 8] = [
        ErrorCategory::PrematureInvocation,
        ErrorCategory::ToolPrediction,
        ErrorCategory::RequiredArguments,
        ErrorCategory::OptionalArguments,
        ErrorCategory::ObservationReasoning,
        ErrorCategory::NonInvocationConfirmation,
        ErrorCategory::NonInvocationHesitation,
        ErrorCategory::NonInvocationHallucination,
    ];

    /// Canonical label, e.g. `premature-invocation`.
    pub fn name(self) -> &'static str {
        match self {
            ErrorCategory::PrematureInvocation => "premature-invocation",
            ErrorCategory::ToolPrediction => "tool-prediction",
            ErrorCategory::RequiredArguments => "required-arguments",
            ErrorCategory::OptionalArguments => "optional-arguments",
            ErrorCategory::ObservationReasoning => "observation-reasoning",
            ErrorCategory::NonInvocationConfirmation => "non-invocation-confirmation",
            ErrorCategory::NonInvocationHesitation => "non-invocation-hesitation",
            ErrorCategory::NonInvocationHallucination => "non-invocation-hallucination",
        }
    }

    /// Human-readable title used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            ErrorCategory::PrematureInvocation => "Premature invocation",
            ErrorCategory::ToolPrediction => "Tool prediction",
            ErrorCategory::RequiredArguments => "Required arguments",
            ErrorCategory::OptionalArguments => "Optional arguments",
            ErrorCategory::ObservationReasoning => "Observation reasoning",
            ErrorCategory::NonInvocationConfirmation => "Non-invocation confirmation",
            ErrorCategory::NonInvocationHesitation => "Non-invocation hesitation",
            ErrorCategory::NonInvocationHallucination => "Non-invocation hallucination",
        }
    }

    /// Generic definition of the mistake.
    pub fn description(self) -> &'static str {
        match self {
            ErrorCategory::PrematureInvocation => {
                "The assistant calls a tool before gathering all necessary information from the user."
            }
            ErrorCategory::ToolPrediction => "The assistant calls the wrong tool for the task.",
            ErrorCategory::RequiredArguments => {
                "The assistant makes a mistake in one or more of the required arguments of a function call. \
                 Mistakes can range from typos to incorrect values that don't align with the user instructions."
            }
            ErrorCategory::OptionalArguments => {
                "The assistant either makes a mistake in one or more optional arguments, omits an optional \
                 argument requested by the user, or adds an unnecessary optional argument to the function call."
            }
            ErrorCategory::ObservationReasoning => {
                "The assistant makes a correct tool call but then misinterprets the result of the call and \
                 formulates an incorrect or hallucinated response."
            }
            ErrorCategory::NonInvocationConfirmation => {
                "The assistant confirms an action was taken without invoking the required tool."
            }
            ErrorCategory::NonInvocationHesitation => {
                "The assistant hesitates and does not call a tool when one is needed."
            }
            ErrorCategory::NonInvocationHallucination => {
                "The assistant hallucinates information about some service instead of getting the true \
                 information from a tool call."
            }
        }
    }

    /// Alternative spellings accepted when reading model output.
    fn aliases(self) -> &'static [&'static str] {
        match self {
            ErrorCategory::ToolPrediction => &["api-prediction"],
            ErrorCategory::PrematureInvocation => &["premature-tool-invocation"],
            _ => &[],
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|c| *c == self).expect("category in ALL")
    }

    /// Finds the earliest category mention in free text. Hyphens, underscores
    /// and case are ignored, so `non-invocation-confirmation` and
    /// `Non invocation confirmation` both match.
    pub fn find_first(text: &str) -> Option<(ErrorCategory, usize)> {
        let hay = normalize_label(text);
        let mut best: Option<(ErrorCategory, usize)> = None;
        for c in Self::ALL {
            for label in std::iter::once(c.name()).chain(c.aliases().iter().copied()) {
                let needle = normalize_label(label);
                if let Some(pos) = find_word(&hay, &needle) {
                    if best.is_none_or(|(_, p)| pos < p) {
                        best = Some((c, pos));
                    }
                }
            }
        }
        best
    }

    /// Matches text that is exactly a category label, optionally followed by
    /// the word "error" and trailing punctuation.
    pub fn from_label(text: &str) -> Option<ErrorCategory> {
        let mut norm = normalize_label(text);
        norm = norm.trim_end_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace()).to_string();
        if let Some(s) = norm.strip_suffix(" error") {
            norm = s.to_string();
        }
        Self::ALL.into_iter().find(|c| {
            std::iter::once(c.name()).chain(c.aliases().iter().copied()).any(|l| normalize_label(l) == norm)
        })
    }
}

fn normalize_label(s: &str) -> String {
    let replaced: String = s.chars().map(|c| if c == '-' || c == '_' { ' ' } else { c.to_ascii_lowercase() }).collect();
    replaced.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Position of `needle` in `hay` at word boundaries.
fn find_word(hay: &str, needle: &str) -> Option<usize> {
    let mut start = 0;
    while let Some(off) = hay[start..].find(needle) {
        let pos = start + off;
        let before_ok = hay[..pos].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
        let after_ok = hay[pos + needle.len()..].chars().next().is_none_or(|c| !c.is_alphanumeric());
        if before_ok && after_ok {
            return Some(pos);
        }
        start = pos + needle.len().max(1);
    }
    None
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ErrorCategory::from_label(s).ok_or_else(|| format!("unknown error category `{s}`"))
    }
}

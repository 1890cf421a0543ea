//! Tool-call matching against ground truth.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::fuzzy::{fuzzy_score, normalize};
use super::MetricsError;
use crate::dialogue::{SchemaPool, ToolCall};

/// Default similarity needed for a free-form argument to count as matching.
pub const DEFAULT_FUZZY_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "score", rename_all = "snake_case")]
pub enum ArgMatch {
    Exact,
    Fuzzy(f64),
    Mismatch,
    /// Present in the ground truth (or required) but absent from the prediction.
    Missing,
    /// Present in the prediction but absent from the ground truth.
    Extra,
}

impl ArgMatch {
    pub fn is_ok(self) -> bool {
        matches!(self, ArgMatch::Exact | ArgMatch::Fuzzy(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchVerdict {
    pub matched: bool,
    pub per_arg: BTreeMap<String, ArgMatch>,
}

/// Compares a predicted call with the ground-truth call.
///
/// Tool names must be equal. Categorical arguments need equal normalized
/// values; free-form arguments match when identical or when their
/// [`fuzzy_score`] reaches `threshold`. Every required argument must be
/// present, and any argument on only one side blocks the match.
pub fn match_tool_call(pred: &ToolCall, gt: &ToolCall, pool: &SchemaPool, threshold: f64) -> Result<MatchVerdict, MetricsError> {
    let gt_schema = pool.get(&gt.tool).ok_or_else(|| MetricsError::UnknownTool(gt.tool.clone()))?;
    pool.get(&pred.tool).ok_or_else(|| MetricsError::UnknownTool(pred.tool.clone()))?;
    if pred.tool != gt.tool {
        return Ok(MatchVerdict { matched: false, per_arg: BTreeMap::new() });
    }
    let names: BTreeSet<&str> = gt_schema
        .required_names()
        .chain(gt.args.keys().map(String::as_str))
        .chain(pred.args.keys().map(String::as_str))
        .collect();
    let mut per_arg = BTreeMap::new();
    for name in names {
        let outcome = match (pred.args.get(name), gt.args.get(name)) {
            (None, _) => ArgMatch::Missing,
            (Some(_), None) => ArgMatch::Extra,
            (Some(p), Some(g)) if p == g => ArgMatch::Exact,
            (Some(p), Some(g)) => {
                let categorical = gt_schema.arg(name).is_some_and(|a| a.is_categorical);
                if categorical {
                    if normalize(p) == normalize(g) {
                        ArgMatch::Exact
                    } else {
                        ArgMatch::Mismatch
                    }
                } else {
                    let score = fuzzy_score(p, g);
                    if score >= threshold {
                        ArgMatch::Fuzzy(score)
                    } else {
                        ArgMatch::Mismatch
                    }
                }
            }
        };
        per_arg.insert(name.to_string(), outcome);
    }
    let matched = per_arg.values().all(|m| m.is_ok());
    Ok(MatchVerdict { matched, per_arg })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::{ToolArgSpec, ToolSchema};

    fn pool() -> SchemaPool {
        [
            ToolSchema {
                name: "FindBus".into(),
                description: String::new(),
                required: vec![
                    ToolArgSpec::free("from_location", ""),
                    ToolArgSpec::free("to_location", ""),
                    ToolArgSpec::free("leaving_date", ""),
                ],
                optional: vec![ToolArgSpec::categorical("travelers", "", ["1", "2", "3", "4", "5"])],
                is_action: false,
                domain: None,
            },
            ToolSchema {
                name: "FindFlights".into(),
                description: String::new(),
                required: vec![],
                optional: vec![],
                is_action: false,
                domain: None,
            },
        ]
        .into_iter()
        .collect()
    }

    fn bus() -> ToolCall {
        ToolCall::new("FindBus")
            .arg("from_location", "Vancouver")
            .arg("leaving_date", "2019-03-12")
            .arg("to_location", "Seattle")
            .arg("travelers", "1")
    }

    #[test]
    fn identical_calls_match() {
        let v = match_tool_call(&bus(), &bus(), &pool(), DEFAULT_FUZZY_THRESHOLD).unwrap();
        assert!(v.matched);
        assert!(v.per_arg.values().all(|m| *m == ArgMatch::Exact));
    }

    #[test]
    fn categorical_is_exact() {
        let pred = bus().arg("travelers", "2");
        let v = match_tool_call(&pred, &bus(), &pool(), DEFAULT_FUZZY_THRESHOLD).unwrap();
        assert!(!v.matched);
        assert_eq!(v.per_arg["travelers"], ArgMatch::Mismatch);
    }

    #[test]
    fn free_form_normalizes() {
        let pred = bus().arg("from_location", "vancouver ");
        let v = match_tool_call(&pred, &bus(), &pool(), DEFAULT_FUZZY_THRESHOLD).unwrap();
        assert!(v.matched);
        assert_eq!(v.per_arg["from_location"], ArgMatch::Fuzzy(1.0));
    }

    #[test]
    fn extra_and_missing_block() {
        let mut pred = bus();
        pred.args.remove("travelers");
        let v = match_tool_call(&pred, &bus(), &pool(), DEFAULT_FUZZY_THRESHOLD).unwrap();
        assert_eq!(v.per_arg["travelers"], ArgMatch::Missing);
        assert!(!v.matched);
        let v = match_tool_call(&bus(), &pred, &pool(), DEFAULT_FUZZY_THRESHOLD).unwrap();
        assert_eq!(v.per_arg["travelers"], ArgMatch::Extra);
        assert!(!v.matched);
    }

    #[test]
    fn different_tools_and_unknown() {
        let other = ToolCall::new("FindFlights");
        assert!(!match_tool_call(&other, &bus(), &pool(), 0.8).unwrap().matched);
        assert!(matches!(
            match_tool_call(&ToolCall::new("Nope"), &bus(), &pool(), 0.8),
            Err(MetricsError::UnknownTool(_))
        ));
    }
}

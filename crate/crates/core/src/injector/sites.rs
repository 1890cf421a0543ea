use crate::category::ErrorCategory;
use crate::dialogue::{Dialogue, SchemaPool, ToolSchema};

use super::values::mentioned;
use super::Injector;

/// For a plain turn `j`: the next tool turn `k` and the required arguments
/// of its call that the user has not mentioned in turns `1..=j`.
pub(crate) fn premature_target(d: &Dialogue, pool: &SchemaPool, j: usize) -> Option<(usize, Vec<String>)> {
    let turn = d.turn(j)?;
    if turn.assistant.call().is_some() {
        return None;
    }
    let k = d.turns[j..].iter().find(|t| t.assistant.call().is_some())?.index;
    let call = d.turn(k)?.assistant.call()?;
    let schema = pool.get(&call.tool)?;
    let said: Vec<&str> = d.turns[..j].iter().map(|t| t.user.as_str()).collect();
    let said = said.join("\n");
    let missing: Vec<String> = schema
        .required_names()
        .filter(|a| call.args.get(*a).is_none_or(|v| !mentioned(v, &said)))
        .map(str::to_string)
        .collect();
    (!missing.is_empty()).then_some((k, missing))
}

/// Tools that could be confused with `schema`: same domain and kind, and at
/// least one required argument name in common.
pub(crate) fn siblings<'a>(pool: &'a SchemaPool, schema: &ToolSchema) -> Vec<&'a ToolSchema> {
    pool.iter()
        .filter(|s| {
            s.name != schema.name
                && s.domain.is_some()
                && s.domain == schema.domain
                && s.is_action == schema.is_action
                && s.required_names().any(|a| schema.is_required(a))
        })
        .collect()
}

pub(crate) fn viable_sites(inj: &Injector, d: &Dialogue, c: ErrorCategory) -> Vec<usize> {
    let pool = inj.pool();
    d.turns
        .iter()
        .filter(|t| {
            let k = t.index;
            if c == ErrorCategory::PrematureInvocation {
                return premature_target(d, pool, k).is_some();
            }
            let Some(call) = t.assistant.call() else { return false };
            let Some(schema) = pool.get(&call.tool) else { return false };
            match c {
                ErrorCategory::PrematureInvocation => unreachable!("handled above"),
                ErrorCategory::ToolPrediction => !siblings(pool, schema).is_empty(),
                ErrorCategory::RequiredArguments | ErrorCategory::OptionalArguments => {
                    !eligible_args(inj, d, c, k).is_empty()
                }
                ErrorCategory::ObservationReasoning | ErrorCategory::NonInvocationHesitation => true,
                ErrorCategory::NonInvocationConfirmation => schema.is_action,
                ErrorCategory::NonInvocationHallucination => !schema.is_action,
            }
        })
        .map(|t| t.index)
        .collect()
}

/// Arguments an argument-category transform may target at turn `k`.
pub(crate) fn eligible_args(inj: &Injector, d: &Dialogue, c: ErrorCategory, k: usize) -> Vec<String> {
    let Some(call) = d.turn(k).and_then(|t| t.assistant.call()) else { return Vec::new() };
    let Some(schema) = inj.pool().get(&call.tool) else { return Vec::new() };
    match c {
        ErrorCategory::RequiredArguments => schema
            .required
            .iter()
            .filter(|spec| {
                call.args.get(&spec.name).is_some_and(|v| {
                    let siblings: Vec<&str> =
                        call.args.iter().filter(|(n, _)| **n != spec.name).map(|(_, v)| v.as_str()).collect();
                    !inj.values().distractors(spec, v, &siblings, inj.threshold()).is_empty()
                })
            })
            .map(|s| s.name.clone())
            .collect(),
        ErrorCategory::OptionalArguments => schema
            .optional
            .iter()
            .filter(|spec| call.args.contains_key(&spec.name) || !inj.values().plausible(spec).is_empty())
            .map(|s| s.name.clone())
            .collect(),
        _ => Vec::new(),
    }
}

pub(crate) fn focus_tool(d: &Dialogue, c: ErrorCategory, turn: usize) -> Option<String> {
    let k = if c == ErrorCategory::PrematureInvocation {
        d.turns[turn..].iter().find(|t| t.assistant.call().is_some())?.index
    } else {
        turn
    };
    d.turn(k)?.assistant.call().map(|call| call.tool.clone())
}

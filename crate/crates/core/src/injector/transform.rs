use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;

use super::sites::{premature_target, siblings};
use super::templates::Slots;
use super::values::{numbers_in, tool_noun};
use super::{
    seeded_rng, ErrorLabel, Hint, InjectedDialogue, InjectionMode, InjectionProvenance, Injector, InjectorError,
    ResponseRewrite, Transform,
};
use crate::category::ErrorCategory;
use crate::dialogue::{AssistantAction, Dialogue, ResultRow, SchemaPool, ToolCall, ToolResult, ToolTurn, Turn};

const COUNT_WORDS: [&str; 3] = ["two", "three", "four"];

pub(crate) fn quoted_list<'a, I: IntoIterator<Item = &'a str>>(items: I) -> String {
    let inner: Vec<String> = items.into_iter().map(|s| format!("'{s}'")).collect();
    format!("[{}]", inner.join(", "))
}

pub(crate) fn quoted_and<'a, I: IntoIterator<Item = &'a str>>(items: I) -> String {
    let inner: Vec<String> = items.into_iter().map(|s| format!("the '{s}'")).collect();
    match inner.len() {
        0 => "all the required information".to_string(),
        1 => inner[0].clone(),
        n => format!("{} and {}", inner[..n - 1].join(", "), inner[n - 1]),
    }
}

pub(crate) fn slots<const N: usize>(pairs: [(&'static str, String); N]) -> Slots {
    pairs.into_iter().collect()
}

fn inapplicable(detail: impl Into<String>) -> InjectorError {
    InjectorError::TransformInapplicable(detail.into())
}

pub(crate) fn injected_id(source: &str, c: ErrorCategory, turn: usize, seed: u64) -> String {
    format!("{source}~{}~t{turn}~s{seed}", c.name())
}

pub(crate) fn inject(inj: &Injector, d: &Dialogue, hint: &Hint) -> Result<InjectedDialogue, InjectorError> {
    let c = hint.category;
    let k = hint.turn;
    if !inj.viable_sites(d, c).contains(&k) {
        return Err(inapplicable(format!("turn {k} is not a viable site for {c}")));
    }
    let mut rng = seeded_rng(hint.seed, &d.id, c, "inject");
    let pool = inj.pool();
    let turn = d.turn(k).expect("viable sites are in range");
    let t = inj.templates();

    let (action, transform, thought) = if c == ErrorCategory::PrematureInvocation {
        let (from, missing) = premature_target(d, pool, k).expect("viable");
        let moved = d.turn(from).expect("in range").assistant.clone();
        let call = moved.call().expect("tool turn");
        let schema = pool.get(&call.tool).expect("viable");
        let s = slots([
            ("turn", k.to_string()),
            ("tool", call.tool.clone()),
            ("required", quoted_list(schema.required_names())),
            ("missing", quoted_and(missing.iter().map(String::as_str))),
        ]);
        let thought = t.thought("premature-invocation", &s, &mut rng);
        (moved, Transform::MoveCall { from_turn: from }, thought)
    } else {
        let tt = turn.assistant.tool_turn().expect("viable sites are tool turns");
        let call = &tt.call;
        let schema = pool.get(&call.tool).expect("viable");
        match c {
            ErrorCategory::PrematureInvocation => unreachable!("handled above"),
            ErrorCategory::ToolPrediction => {
                let sibs = siblings(pool, schema);
                let sub = *sibs.choose(&mut rng).expect("viable");
                let mut args = std::collections::BTreeMap::new();
                for spec in &sub.required {
                    let value = match call.args.get(&spec.name) {
                        Some(v) if !spec.is_categorical || spec.possible_values.contains(v) => v.clone(),
                        _ => inj
                            .values()
                            .plausible(spec)
                            .choose(&mut rng)
                            .cloned()
                            .ok_or_else(|| inapplicable(format!("no value for {}.{}", sub.name, spec.name)))?,
                    };
                    args.insert(spec.name.clone(), value);
                }
                for spec in &sub.optional {
                    if let Some(v) = call.args.get(&spec.name) {
                        if !spec.is_categorical || spec.possible_values.contains(v) {
                            args.insert(spec.name.clone(), v.clone());
                        }
                    }
                }
                let new_call = ToolCall { tool: sub.name.clone(), args };
                let rekey = |row: &ResultRow| -> ResultRow {
                    let mut out: ResultRow = new_call.args.clone();
                    for (key, v) in row {
                        if schema.arg(key).is_none() && !out.contains_key(key) {
                            out.insert(key.clone(), v.clone());
                        }
                    }
                    out
                };
                let result = match &tt.result {
                    ToolResult::Rows(rows) => ToolResult::Rows(rows.iter().map(rekey).collect()),
                    ToolResult::Single(row) => ToolResult::Single(rekey(row)),
                };
                let s = slots([("turn", k.to_string()), ("tool", sub.name.clone()), ("expected_tool", call.tool.clone())]);
                let thought = t.thought("tool-prediction", &s, &mut rng);
                let transform = Transform::SwapTool { original: call.tool.clone(), substitute: sub.name.clone() };
                (AssistantAction::tool(new_call, result, tt.response.clone()), transform, thought)
            }
            ErrorCategory::RequiredArguments => {
                let arg = hint.focus_arg.as_deref().ok_or_else(|| inapplicable("hint names no argument"))?;
                let spec = schema.arg(arg).filter(|_| schema.is_required(arg)).ok_or_else(|| inapplicable(format!("{arg} is not required")))?;
                let original = call.args.get(arg).ok_or_else(|| inapplicable(format!("call lacks {arg}")))?;
                let replacement = pick_distractor(inj, call, spec, original, &mut rng)?;
                let mut new_call = call.clone();
                new_call.args.insert(arg.to_string(), replacement.clone());
                let s = slots([
                    ("turn", k.to_string()),
                    ("tool", call.tool.clone()),
                    ("arg", arg.to_string()),
                    ("value", replacement.clone()),
                    ("expected", original.clone()),
                ]);
                let thought = t.thought("required-arguments", &s, &mut rng);
                let transform = Transform::ReplaceArg { arg: arg.to_string(), original: original.clone(), replacement };
                (AssistantAction::tool(new_call, tt.result.clone(), tt.response.clone()), transform, thought)
            }
            ErrorCategory::OptionalArguments => {
                let arg = hint.focus_arg.as_deref().ok_or_else(|| inapplicable("hint names no argument"))?;
                let spec = schema.arg(arg).filter(|_| schema.is_optional(arg)).ok_or_else(|| inapplicable(format!("{arg} is not optional")))?;
                let mut new_call = call.clone();
                let (bank, value, expected, transform) = match call.args.get(arg) {
                    Some(original) => {
                        let alter = pick_distractor(inj, call, spec, original, &mut rng).ok().filter(|_| rng.random_bool(0.5));
                        match alter {
                            Some(replacement) => {
                                new_call.args.insert(arg.to_string(), replacement.clone());
                                let tr = Transform::AlterOptional {
                                    arg: arg.to_string(),
                                    original: original.clone(),
                                    replacement: replacement.clone(),
                                };
                                ("optional-arguments-alter", replacement, original.clone(), tr)
                            }
                            None => {
                                new_call.args.remove(arg);
                                let tr = Transform::DropOptional { arg: arg.to_string(), original: original.clone() };
                                ("optional-arguments-drop", String::new(), original.clone(), tr)
                            }
                        }
                    }
                    None => {
                        let value = inj
                            .values()
                            .plausible(spec)
                            .choose(&mut rng)
                            .cloned()
                            .ok_or_else(|| inapplicable(format!("no value for {arg}")))?;
                        new_call.args.insert(arg.to_string(), value.clone());
                        let tr = Transform::AddOptional { arg: arg.to_string(), value: value.clone() };
                        ("optional-arguments-add", value, String::new(), tr)
                    }
                };
                let s = slots([
                    ("turn", k.to_string()),
                    ("tool", call.tool.clone()),
                    ("arg", arg.to_string()),
                    ("value", value),
                    ("expected", expected),
                ]);
                let thought = t.thought(bank, &s, &mut rng);
                (AssistantAction::tool(new_call, tt.result.clone(), tt.response.clone()), transform, thought)
            }
            ErrorCategory::ObservationReasoning => {
                let (response, rewrite) = rewrite_response(inj, tt, schema.is_action, &mut rng)?;
                let s = slots([("turn", k.to_string()), ("tool", call.tool.clone())]);
                let thought = t.thought("observation-reasoning", &s, &mut rng);
                let action = AssistantAction::tool(call.clone(), tt.result.clone(), response);
                (action, Transform::RewriteResponse { rewrite }, thought)
            }
            ErrorCategory::NonInvocationConfirmation
            | ErrorCategory::NonInvocationHesitation
            | ErrorCategory::NonInvocationHallucination => {
                let noun = tool_noun(&call.tool);
                let response = match c {
                    ErrorCategory::NonInvocationConfirmation => {
                        t.response("confirmation", &slots([("noun", noun)]), &mut rng)
                    }
                    ErrorCategory::NonInvocationHesitation => {
                        let other = other_domain_noun(pool, &call.tool, &mut rng);
                        t.response("hesitation", &slots([("other", other)]), &mut rng)
                    }
                    _ => {
                        let mut taken: BTreeSet<u64> = numbers_in(&tt.response);
                        for v in tt.result.values() {
                            taken.extend(numbers_in(v));
                        }
                        let free: Vec<u64> = (11..=99).filter(|n| !taken.contains(n)).collect();
                        let picked: Vec<u64> = free.choose_multiple(&mut rng, 2).copied().collect();
                        if picked.len() < 2 {
                            return Err(inapplicable("no unused numbers left for fabricated options"));
                        }
                        let s = slots([
                            ("noun", noun),
                            ("price1", picked[0].to_string()),
                            ("price2", picked[1].to_string()),
                            ("count", COUNT_WORDS.choose(&mut rng).expect("non-empty").to_string()),
                        ]);
                        t.response("hallucination", &s, &mut rng)
                    }
                };
                let s = slots([("turn", k.to_string()), ("expected_tool", call.tool.clone())]);
                let thought = t.thought(c.name(), &s, &mut rng);
                (AssistantAction::response(response), Transform::RemoveCall { category: c }, thought)
            }
        }
    };

    let mut turns = d.turns[..k - 1].to_vec();
    turns.push(Turn { index: k, user: turn.user.clone(), assistant: action });
    Ok(InjectedDialogue {
        dialogue: Dialogue { id: injected_id(&d.id, c, k, hint.seed), turns },
        label: ErrorLabel { category: c, thought },
        provenance: InjectionProvenance {
            source_id: d.id.clone(),
            category: c,
            error_turn: k,
            transform,
            mode: InjectionMode::Deterministic,
            hint: hint.clone(),
        },
    })
}

fn pick_distractor<R: Rng>(
    inj: &Injector,
    call: &ToolCall,
    spec: &crate::dialogue::ToolArgSpec,
    current: &str,
    rng: &mut R,
) -> Result<String, InjectorError> {
    let siblings: Vec<&str> = call.args.iter().filter(|(n, _)| **n != spec.name).map(|(_, v)| v.as_str()).collect();
    inj.values()
        .distractors(spec, current, &siblings, inj.threshold())
        .choose(rng)
        .cloned()
        .ok_or_else(|| inapplicable(format!("no distractor for {}", spec.name)))
}

fn other_domain_noun<R: Rng>(pool: &SchemaPool, tool: &str, rng: &mut R) -> String {
    let domain = pool.get(tool).and_then(|s| s.domain.clone());
    let own = tool_noun(tool);
    let nouns: BTreeSet<String> = pool
        .iter()
        .filter(|s| !s.is_action && s.name != tool && (domain.is_none() || s.domain != domain))
        .map(|s| tool_noun(&s.name))
        .filter(|n| *n != own && n != "request")
        .collect();
    let nouns: Vec<String> = nouns.into_iter().collect();
    nouns.choose(rng).cloned().unwrap_or_else(|| "hotel".to_string())
}

fn rewrite_response<R: Rng>(
    inj: &Injector,
    tt: &ToolTurn,
    is_action: bool,
    rng: &mut R,
) -> Result<(String, ResponseRewrite), InjectorError> {
    let t = inj.templates();
    let noun = tool_noun(&tt.call.tool);
    let rows = tt.result.rows();
    let (bank, s, rewrite) = if rows.iter().all(|r| r.is_empty()) {
        ("success_claim", slots([("noun", noun)]), ResponseRewrite::SuccessClaim)
    } else {
        let numeric: Vec<(&String, u64)> = rows[0]
            .iter()
            .filter(|(_, v)| !v.is_empty() && v.len() < 10 && v.chars().all(|c| c.is_ascii_digit()))
            .filter_map(|(k, v)| v.parse().ok().map(|n| (k, n)))
            .collect();
        match numeric.choose(rng).filter(|_| rng.random_bool(0.5)) {
            Some(&(field, n)) => {
                let taken: BTreeSet<&str> = rows.iter().filter_map(|r| r.get(field)).map(String::as_str).collect();
                let options: Vec<String> = (1..=9u64)
                    .flat_map(|d| [n + d, n.saturating_sub(d)])
                    .filter(|m| *m > 0)
                    .map(|m| m.to_string())
                    .filter(|m| !taken.contains(m.as_str()))
                    .collect();
                let value = options.choose(rng).cloned().ok_or_else(|| inapplicable("no perturbed value"))?;
                (
                    "numeric_claim",
                    slots([("field", field.replace('_', " ")), ("value", value)]),
                    ResponseRewrite::NumericClaim,
                )
            }
            None => {
                let bank = if is_action { "failure_claim_action" } else { "failure_claim_search" };
                (bank, slots([("noun", noun)]), ResponseRewrite::FailureClaim)
            }
        }
    };
    let first = t.response(bank, &s, rng);
    if first != tt.response {
        return Ok((first, rewrite));
    }
    t.response_bank(bank)
        .iter()
        .map(|tpl| super::templates::fill(tpl, &s))
        .find(|r| *r != tt.response)
        .map(|r| (r, rewrite))
        .ok_or_else(|| inapplicable("every rewrite equals the original response"))
}

/// Checks the single-error contract of an injection against its source:
/// identical prefix, truncation at the error turn, a changed final action,
/// and a change that matches the declared transform.
pub fn verify_provenance(inj: &InjectedDialogue, source: &Dialogue, pool: &SchemaPool) -> bool {
    let p = &inj.provenance;
    let k = p.error_turn;
    if p.source_id != source.id || p.category != inj.label.category || k == 0 || k > source.len() {
        return false;
    }
    let d = &inj.dialogue;
    if d.len() != k || d.turns[..k - 1] != source.turns[..k - 1] {
        return false;
    }
    let (new, old) = (&d.turns[k - 1], &source.turns[k - 1]);
    if new.index != k || new.user != old.user || new.assistant == old.assistant {
        return false;
    }
    if inj.label.thought.trim().is_empty() {
        return false;
    }
    let (na, oa) = (&new.assistant, &old.assistant);
    let same_but = |arg: &str| -> Option<(Option<&String>, Option<&String>)> {
        let (n, o) = (na.tool_turn()?, oa.tool_turn()?);
        let mut nc = n.call.clone();
        let mut oc = o.call.clone();
        let pair = (n.call.args.get(arg), o.call.args.get(arg));
        nc.args.remove(arg);
        oc.args.remove(arg);
        (nc == oc && n.result == o.result && n.response == o.response).then_some(pair)
    };
    let schema_of = |a: &AssistantAction| a.call().and_then(|c| pool.get(&c.tool));
    use ErrorCategory as C;
    match (&p.transform, p.category) {
        (Transform::MoveCall { from_turn }, C::PrematureInvocation) => {
            oa.call().is_none() && *from_turn > k && source.turn(*from_turn).is_some_and(|t| t.assistant == *na)
        }
        (Transform::SwapTool { original, substitute }, C::ToolPrediction) => {
            oa.call().is_some_and(|c| c.tool == *original)
                && na.call().is_some_and(|c| c.tool == *substitute)
                && original != substitute
        }
        (Transform::ReplaceArg { arg, original, replacement }, C::RequiredArguments) => {
            schema_of(oa).is_some_and(|s| s.is_required(arg))
                && original != replacement
                && same_but(arg) == Some((Some(replacement), Some(original)))
        }
        (Transform::AddOptional { arg, value }, C::OptionalArguments) => {
            schema_of(oa).is_some_and(|s| s.is_optional(arg)) && same_but(arg) == Some((Some(value), None))
        }
        (Transform::AlterOptional { arg, original, replacement }, C::OptionalArguments) => {
            schema_of(oa).is_some_and(|s| s.is_optional(arg))
                && original != replacement
                && same_but(arg) == Some((Some(replacement), Some(original)))
        }
        (Transform::DropOptional { arg, original }, C::OptionalArguments) => {
            schema_of(oa).is_some_and(|s| s.is_optional(arg)) && same_but(arg) == Some((None, Some(original)))
        }
        (Transform::RewriteResponse { .. }, C::ObservationReasoning) => match (na.tool_turn(), oa.tool_turn()) {
            (Some(n), Some(o)) => n.call == o.call && n.result == o.result && n.response != o.response,
            _ => false,
        },
        (Transform::RemoveCall { category }, c) if *category == c => {
            na.call().is_none()
                && match c {
                    C::NonInvocationConfirmation => schema_of(oa).is_some_and(|s| s.is_action),
                    C::NonInvocationHallucination => schema_of(oa).is_some_and(|s| !s.is_action),
                    C::NonInvocationHesitation => oa.call().is_some(),
                    _ => false,
                }
        }
        (Transform::Generated { .. }, _) => p.mode == InjectionMode::Llm,
        _ => false,
    }
}

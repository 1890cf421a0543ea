//! Human inspection of revisions and of generated error samples.
//!
//! Reviewers walk through turns of a run (initial answer, feedback, revised
//! answer) and file one [`AnnotationRecord`] each, or through a
//! quality-control batch and mark each sample as following its category
//! definition or not. Both walks are driven through plain reader/writer
//! pairs so they work on a terminal and in tests alike.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{QcAnnotation, ReviewBatch};
use crate::dialogue::AssistantAction;
use crate::harness::{render_action, RunReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    UselessNoDifference,
    MadeCorrect,
    MadeBetter,
    MadeIncorrect,
    MissedAnError,
    CaughtButNotCorrected,
}

impl Outcome {
    pub const ALL: [Outcome; 6] = [
        Outcome::UselessNoDifference,
        Outcome::MadeCorrect,
        Outcome::MadeBetter,
        Outcome::MadeIncorrect,
        Outcome::MissedAnError,
        Outcome::CaughtButNotCorrected,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Outcome::UselessNoDifference => "useless-no-difference",
            Outcome::MadeCorrect => "made-correct",
            Outcome::MadeBetter => "made-better",
            Outcome::MadeIncorrect => "made-incorrect",
            Outcome::MissedAnError => "missed-an-error",
            Outcome::CaughtButNotCorrected => "caught-but-not-corrected",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Outcome::UselessNoDifference => "Useless/No Difference",
            Outcome::MadeCorrect => "Made Correct",
            Outcome::MadeBetter => "Made Better",
            Outcome::MadeIncorrect => "Made Incorrect",
            Outcome::MissedAnError => "Missed an Error",
            Outcome::CaughtButNotCorrected => "Caught Error but Could Not Correct",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Outcome {
    type Err = String;

    /// Accepts the kebab name or the 1-based menu number.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(n) = s.parse::<usize>() {
            if (1..=6).contains(&n) {
                return Ok(Outcome::ALL[n - 1]);
            }
        }
        Outcome::ALL.into_iter().find(|o| o.name() == s).ok_or_else(|| format!("unknown outcome `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub dialogue_id: String,
    pub k: usize,
    #[serde(default)]
    pub scenario: String,
    pub outcome: Outcome,
    #[serde(default)]
    pub annotator: String,
    #[serde(default)]
    pub note: String,
}

/// One turn as shown to a reviewer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewTurn {
    pub dialogue_id: String,
    pub k: usize,
    pub scenario: String,
    pub initial: AssistantAction,
    pub feedback: Option<String>,
    pub revised: Option<AssistantAction>,
}

/// Turns of a run in report order, optionally only those that were revised.
pub fn review_turns(report: &RunReport, only_revised: bool) -> Vec<ReviewTurn> {
    report
        .dialogues
        .iter()
        .flat_map(|d| {
            d.records.iter().filter(move |r| !only_revised || r.revised.is_some()).map(move |r| ReviewTurn {
                dialogue_id: d.dialogue_id.clone(),
                k: r.k,
                scenario: report.manifest.scenario.name().to_string(),
                initial: r.initial.clone(),
                feedback: r.feedback.clone(),
                revised: r.revised.clone(),
            })
        })
        .collect()
}

fn ask<R: BufRead, W: Write>(input: &mut R, out: &mut W, prompt: &str) -> io::Result<Option<String>> {
    write!(out, "{prompt}")?;
    out.flush()?;
    let mut line = String::new();
    if input.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    Ok(Some(line.trim().to_string()))
}

/// Shows each turn and records one outcome per turn. Stops early (keeping
/// what was recorded) when the input ends.
pub fn annotate_turns<R: BufRead, W: Write>(
    turns: &[ReviewTurn],
    annotator: &str,
    input: &mut R,
    out: &mut W,
) -> io::Result<Vec<AnnotationRecord>> {
    let mut records = Vec::new();
    for (i, t) in turns.iter().enumerate() {
        writeln!(out, "\n=== [{}/{}] {} turn {} ({}) ===", i + 1, turns.len(), t.dialogue_id, t.k, t.scenario)?;
        writeln!(out, "--- initial ---\n{}", render_action(&t.initial))?;
        writeln!(out, "--- feedback ---\n{}", t.feedback.as_deref().unwrap_or("(none)"))?;
        writeln!(out, "--- revised ---\n{}", t.revised.as_ref().map_or("(none)".to_string(), render_action))?;
        for (n, o) in Outcome::ALL.iter().enumerate() {
            writeln!(out, "  {}) {}", n + 1, o.title())?;
        }
        let outcome = loop {
            let Some(answer) = ask(input, out, "outcome> ")? else { return Ok(records) };
            match answer.parse::<Outcome>() {
                Ok(o) => break o,
                Err(e) => writeln!(out, "{e}")?,
            }
        };
        let note = ask(input, out, "note (optional)> ")?.unwrap_or_default();
        records.push(AnnotationRecord {
            dialogue_id: t.dialogue_id.clone(),
            k: t.k,
            scenario: t.scenario.clone(),
            outcome,
            annotator: annotator.to_string(),
            note,
        });
    }
    Ok(records)
}

/// Asks whether each sample of a quality-control batch follows the
/// category definition.
pub fn annotate_batch<R: BufRead, W: Write>(
    batch: &ReviewBatch,
    annotator: &str,
    input: &mut R,
    out: &mut W,
) -> io::Result<Vec<QcAnnotation>> {
    writeln!(out, "Category: {}\nDefinition: {}", batch.category, batch.definition)?;
    let mut records = Vec::new();
    for (i, item) in batch.items.iter().enumerate() {
        writeln!(out, "\n=== [{}/{}] {} (error at turn {}) ===\n{}", i + 1, batch.items.len(), item.id, item.error_turn, item.text)?;
        writeln!(out, "--- label thought ---\n{}", item.thought)?;
        let follows = loop {
            let Some(answer) = ask(input, out, "follows the definition? [y/n]> ")? else { return Ok(records) };
            match answer.to_ascii_lowercase().as_str() {
                "y" | "yes" => break true,
                "n" | "no" => break false,
                _ => writeln!(out, "answer y or n")?,
            }
        };
        let note = ask(input, out, "note (optional)> ")?.unwrap_or_default();
        records.push(QcAnnotation { id: item.id.clone(), follows_definition: follows, annotator: annotator.to_string(), note });
    }
    Ok(records)
}

/// Share of each outcome, in percent, per scenario. Outcomes with no
/// records show as 0.
pub fn outcome_percentages(records: &[AnnotationRecord]) -> BTreeMap<String, BTreeMap<Outcome, f64>> {
    let mut counts: BTreeMap<String, BTreeMap<Outcome, u64>> = BTreeMap::new();
    for r in records {
        *counts.entry(r.scenario.clone()).or_default().entry(r.outcome).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(scenario, c)| {
            let total: u64 = c.values().sum();
            let shares = Outcome::ALL
                .into_iter()
                .map(|o| (o, 100.0 * *c.get(&o).unwrap_or(&0) as f64 / total as f64))
                .collect();
            (scenario, shares)
        })
        .collect()
}

/// Outcome rows by scenario columns, two decimals.
pub fn outcome_grid(records: &[AnnotationRecord]) -> String {
    let shares = outcome_percentages(records);
    let width = Outcome::ALL.iter().map(|o| o.title().len()).max().unwrap_or(0);
    let mut out = format!("{:<width$}", "Outcome");
    for s in shares.keys() {
        out.push_str(&format!(" | {s:>20}"));
    }
    out.push('\n');
    for o in Outcome::ALL {
        out.push_str(&format!("{:<width$}", o.title()));
        for s in shares.values() {
            out.push_str(&format!(" | {:>19.2}%", s[&o]));
        }
        out.push('\n');
    }
    out
}

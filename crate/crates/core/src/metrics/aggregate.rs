//! Seed aggregation and report tables.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::detection::{confusion_labels, NO_ERROR_INDEX};
use super::scores::{rate_f64, CallCounts};
use crate::category::ErrorCategory;

/// Column order of the summary grid.
pub const METRIC_NAMES: [&str; 4] = ["precision", "recall", "incorrect_action_rate", "success_rate"];

/// Metric totals of one scenario run under one seed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub scenario: String,
    pub seed: u64,
    /// Tool-call tallies summed over all dialogues.
    pub counts: CallCounts,
    pub dialogues: u64,
    pub successes: u64,
    /// Critic verdicts per category over all turns, indexed like the
    /// confusion matrix (8 is "no error"). Turns without a critic verdict are
    /// not counted.
    pub profile: [u64; 9],
    /// Verdicts the critic produced that could not be parsed.
    #[serde(default)]
    pub unparseable: u64,
}

impl RunMetrics {
    pub fn success_rate(&self) -> f64 {
        if self.dialogues == 0 {
            1.0
        } else {
            self.successes as f64 / self.dialogues as f64
        }
    }

    pub fn value(&self, metric: &str) -> Option<f64> {
        match metric {
            "precision" => Some(rate_f64(&self.counts.precision())),
            "recall" => Some(rate_f64(&self.counts.recall())),
            "incorrect_action_rate" => Some(rate_f64(&self.counts.incorrect_action_rate())),
            "success_rate" => Some(self.success_rate()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (n − 1); 0 for a single run.
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: 0.0, std: 0.0, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { mean, std, n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub metrics: BTreeMap<String, MeanStd>,
    /// Percentage of critic-inspected turns per verdict label, pooled over
    /// seeds. Empty when no turn was inspected.
    pub error_profile: BTreeMap<String, f64>,
    pub unparseable: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<ScenarioSummary>,
}

/// Groups runs by scenario (in order of first appearance) and reduces each
/// group to mean and sample standard deviation per metric.
pub fn aggregate(runs: &[RunMetrics]) -> Summary {
    let mut order: Vec<&str> = Vec::new();
    for r in runs {
        if !order.contains(&r.scenario.as_str()) {
            order.push(&r.scenario);
        }
    }
    let rows = order
        .into_iter()
        .map(|scenario| {
            let group: Vec<&RunMetrics> = runs.iter().filter(|r| r.scenario == scenario).collect();
            let metrics = METRIC_NAMES
                .iter()
                .map(|m| {
                    let values: Vec<f64> = group.iter().filter_map(|r| r.value(m)).collect();
                    (m.to_string(), MeanStd::of(&values))
                })
                .collect();
            let mut profile = [0u64; 9];
            for r in &group {
                for (i, v) in r.profile.iter().enumerate() {
                    profile[i] += v;
                }
            }
            ScenarioSummary {
                scenario: scenario.to_string(),
                seeds: group.iter().map(|r| r.seed).collect(),
                metrics,
                error_profile: profile_percentages(&profile),
                unparseable: group.iter().map(|r| r.unparseable).sum(),
            }
        })
        .collect();
    Summary { rows }
}

pub fn profile_percentages(profile: &[u64; 9]) -> BTreeMap<String, f64> {
    let total: u64 = profile.iter().sum();
    if total == 0 {
        return BTreeMap::new();
    }
    confusion_labels()
        .iter()
        .zip(profile)
        .map(|(l, &n)| (l.to_string(), 100.0 * n as f64 / total as f64))
        .collect()
}

impl Summary {
    /// Scenario × metric grid, values in percent as `mean ± std`.
    pub fn to_grid(&self) -> String {
        let mut header = vec!["scenario".to_string()];
        header.extend(METRIC_NAMES.iter().map(|s| s.to_string()));
        let mut lines = vec![header];
        for row in &self.rows {
            let mut line = vec![row.scenario.clone()];
            for m in METRIC_NAMES {
                let v = row.metrics[m];
                line.push(format!("{:.2} ± {:.2}", 100.0 * v.mean, 100.0 * v.std));
            }
            lines.push(line);
        }
        render_table(&lines)
    }

    /// Per-scenario error profile grid, in percent of inspected turns.
    pub fn profile_grid(&self) -> String {
        let labels = confusion_labels();
        let mut header = vec!["scenario".to_string()];
        // No-error first, then categories in registry order.
        header.push(labels[NO_ERROR_INDEX].to_string());
        header.extend(ErrorCategory::ALL.iter().map(|c| c.name().to_string()));
        let mut lines = vec![header.clone()];
        for row in self.rows.iter().filter(|r| !r.error_profile.is_empty()) {
            let mut line = vec![row.scenario.clone()];
            for l in &header[1..] {
                line.push(format!("{:.2}", row.error_profile[l]));
            }
            lines.push(line);
        }
        render_table(&lines)
    }
}

fn render_table(lines: &[Vec<String>]) -> String {
    let cols = lines.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| lines.iter().filter_map(|l| l.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for line in lines {
        let cells: Vec<String> = line
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{s}{}", " ".repeat(widths[i] - s.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", cells.join(" | ").trim_end());
    }
    out
}

//! Corpus runs: seeded repetitions, resumable persistence and reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_turn, Assistant, HarnessError, MissPolicy, Scenario, TurnRecord, TurnSettings};
use crate::critic::Critic;
use crate::dialogue::{write_corpus_jsonl, AssistantAction, Dialogue, SchemaPool};
use crate::endpoint::{sha256_hex, DEFAULT_TEMPERATURE};
use crate::metrics::{dialogue_metrics, DialogueScore, RunMetrics, DEFAULT_FUZZY_THRESHOLD, NO_ERROR_INDEX};

/// Everything needed to reproduce a run with deterministic endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: Scenario,
    pub assistant: String,
    pub critic: Option<String>,
    pub corpus_sha256: String,
    pub dialogues: usize,
    pub seed: u64,
    pub assistant_temperature: f64,
    pub critic_temperature: f64,
    pub fuzzy_threshold: f64,
    pub miss_policy: MissPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueRun {
    pub dialogue_id: String,
    pub records: Vec<TurnRecord>,
    pub score: DialogueScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub dialogues: Vec<DialogueRun>,
    pub metrics: RunMetrics,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Line {
    Manifest(RunManifest),
    Dialogue(DialogueRun),
    Metrics(RunMetrics),
}

fn line(l: &Line) -> String {
    let mut s = serde_json::to_string(l).expect("report lines serialize");
    s.push('\n');
    s
}

impl RunReport {
    /// Manifest line, one line per dialogue, then the totals.
    pub fn to_jsonl(&self) -> String {
        let mut out = line(&Line::Manifest(self.manifest.clone()));
        for d in &self.dialogues {
            out.push_str(&line(&Line::Dialogue(d.clone())));
        }
        out.push_str(&line(&Line::Metrics(self.metrics.clone())));
        out
    }

    pub fn sha256(&self) -> String {
        sha256_hex(self.to_jsonl().as_bytes())
    }

    pub fn file_name(scenario: Scenario, seed: u64) -> String {
        format!("{}-seed{seed}.jsonl", scenario.name())
    }
}

/// Reads a report written by [`run_corpus`].
pub fn read_report(path: &Path) -> Result<RunReport, HarnessError> {
    let corrupt = |detail: String| HarnessError::Corrupt { path: path.display().to_string(), detail };
    let (mut manifest, mut dialogues, mut metrics) = (None, Vec::new(), None);
    for (i, l) in BufReader::new(File::open(path)?).lines().enumerate() {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&l).map_err(|e| corrupt(format!("line {}: {e}", i + 1)))? {
            Line::Manifest(m) => manifest = Some(m),
            Line::Dialogue(d) => dialogues.push(d),
            Line::Metrics(m) => metrics = Some(m),
        }
    }
    Ok(RunReport {
        manifest: manifest.ok_or_else(|| corrupt("no manifest line".into()))?,
        dialogues,
        metrics: metrics.ok_or_else(|| corrupt("no metrics line".into()))?,
    })
}

pub fn corpus_hash(corpus: &[Dialogue]) -> String {
    sha256_hex(write_corpus_jsonl(corpus).as_bytes())
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seeds: Vec<u64>,
    pub threshold: f64,
    pub miss: MissPolicy,
    pub assistant_temperature: f64,
    pub critic_temperature: f64,
    /// Where reports (and partial progress) go; nothing is written if unset.
    pub out_dir: Option<PathBuf>,
    /// Continue from partial progress or reuse a finished report.
    pub resume: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seeds: vec![0, 1],
            threshold: DEFAULT_FUZZY_THRESHOLD,
            miss: MissPolicy::default(),
            assistant_temperature: DEFAULT_TEMPERATURE,
            critic_temperature: DEFAULT_TEMPERATURE,
            out_dir: None,
            resume: false,
        }
    }
}

/// Runs every turn of `gt` and scores the final actions.
pub fn run_dialogue(
    gt: &Dialogue,
    pool: &SchemaPool,
    assistant: &dyn Assistant,
    critic: Option<&dyn Critic>,
    scenario: Scenario,
    settings: &TurnSettings,
) -> Result<DialogueRun, HarnessError> {
    let records = (1..=gt.len())
        .map(|k| run_turn(gt, k, pool, assistant, critic, scenario, settings))
        .collect::<Result<Vec<_>, _>>()?;
    let finals: Vec<AssistantAction> = records.iter().map(|r| r.final_action.clone()).collect();
    let score = dialogue_metrics(&finals, gt, pool, settings.threshold)?;
    Ok(DialogueRun { dialogue_id: gt.id.clone(), records, score })
}

fn totals(scenario: Scenario, seed: u64, runs: &[DialogueRun]) -> RunMetrics {
    let mut m = RunMetrics { scenario: scenario.name().to_string(), seed, ..RunMetrics::default() };
    for d in runs {
        m.counts.add(&d.score.counts);
        m.dialogues += 1;
        m.successes += u64::from(d.score.is_success());
        for r in &d.records {
            if let Some(v) = &r.verdict {
                m.profile[v.category().map_or(NO_ERROR_INDEX, |c| c.index())] += 1;
                m.unparseable += u64::from(v.unparseable);
            }
        }
    }
    m
}

/// One report per seed. Dialogues run in parallel; reports list them in
/// corpus order, so the output does not depend on scheduling.
pub fn run_corpus(
    corpus: &[Dialogue],
    pool: &SchemaPool,
    assistant: &dyn Assistant,
    critic: Option<&dyn Critic>,
    scenario: Scenario,
    options: &RunOptions,
) -> Result<Vec<RunReport>, HarnessError> {
    if scenario.uses_critic() && critic.is_none() {
        return Err(HarnessError::MissingCritic(scenario));
    }
    let mut ids = BTreeSet::new();
    if let Some(d) = corpus.iter().find(|d| !ids.insert(d.id.as_str())) {
        return Err(HarnessError::Corrupt { path: "<corpus>".into(), detail: format!("duplicate dialogue id `{}`", d.id) });
    }
    let hash = corpus_hash(corpus);
    options.seeds.iter().map(|&seed| {
        let manifest = RunManifest {
            scenario,
            assistant: assistant.identity(),
            critic: critic.filter(|_| scenario.uses_critic()).map(|c| c.identity()),
            corpus_sha256: hash.clone(),
            dialogues: corpus.len(),
            seed,
            assistant_temperature: options.assistant_temperature,
            critic_temperature: options.critic_temperature,
            fuzzy_threshold: options.threshold,
            miss_policy: options.miss,
        };
        run_seed(corpus, pool, assistant, critic, manifest, options)
    }).collect()
}

fn run_seed(
    corpus: &[Dialogue],
    pool: &SchemaPool,
    assistant: &dyn Assistant,
    critic: Option<&dyn Critic>,
    manifest: RunManifest,
    options: &RunOptions,
) -> Result<RunReport, HarnessError> {
    let settings = TurnSettings { threshold: options.threshold, miss: options.miss, seed: manifest.seed };
    let scenario = manifest.scenario;
    let paths = options.out_dir.as_ref().map(|dir| {
        let name = RunReport::file_name(scenario, manifest.seed);
        (dir.join(&name), dir.join(format!("{name}.partial")))
    });
    let mut done: BTreeMap<String, DialogueRun> = BTreeMap::new();
    let mut sink = None;
    if let Some((final_path, partial_path)) = &paths {
        fs::create_dir_all(final_path.parent().expect("joined path"))?;
        if options.resume && final_path.exists() {
            let report = read_report(final_path)?;
            check_manifest(&report.manifest, &manifest, final_path)?;
            return Ok(report);
        }
        if options.resume && partial_path.exists() {
            let partial = read_partial(partial_path)?;
            if let Some(m) = &partial.0 {
                check_manifest(m, &manifest, partial_path)?;
            }
            done = partial.1.into_iter().map(|d| (d.dialogue_id.clone(), d)).collect();
            log::info!("resuming {}: {} dialogues already done", partial_path.display(), done.len());
        }
        let mut file = OpenOptions::new().create(true).write(true).truncate(true).open(partial_path)?;
        file.write_all(line(&Line::Manifest(manifest.clone())).as_bytes())?;
        for d in done.values() {
            file.write_all(line(&Line::Dialogue(d.clone())).as_bytes())?;
        }
        file.flush()?;
        sink = Some(Mutex::new(file));
    }
    let todo: Vec<&Dialogue> = corpus.iter().filter(|d| !done.contains_key(&d.id)).collect();
    let fresh: Vec<Result<DialogueRun, HarnessError>> = todo
        .par_iter()
        .map(|gt| {
            let run = run_dialogue(gt, pool, assistant, critic, scenario, &settings)?;
            if let Some(sink) = &sink {
                let mut f = sink.lock().expect("partial file lock");
                f.write_all(line(&Line::Dialogue(run.clone())).as_bytes())?;
                f.flush()?;
            }
            Ok(run)
        })
        .collect();
    for r in fresh {
        let r = r?;
        done.insert(r.dialogue_id.clone(), r);
    }
    let dialogues: Vec<DialogueRun> = corpus.iter().map(|d| done.remove(&d.id).expect("every dialogue ran")).collect();
    let metrics = totals(scenario, manifest.seed, &dialogues);
    let report = RunReport { manifest, dialogues, metrics };
    if let Some((final_path, partial_path)) = &paths {
        drop(sink);
        let dir = final_path.parent().expect("joined path");
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(report.to_jsonl().as_bytes())?;
        tmp.persist(final_path).map_err(|e| e.error)?;
        fs::remove_file(partial_path)?;
    }
    Ok(report)
}

fn check_manifest(found: &RunManifest, expected: &RunManifest, path: &Path) -> Result<(), HarnessError> {
    if found == expected {
        return Ok(());
    }
    let f = serde_json::to_value(found).expect("manifest serializes");
    let e = serde_json::to_value(expected).expect("manifest serializes");
    let fields: Vec<String> = e
        .as_object()
        .expect("object")
        .iter()
        .filter(|(k, v)| f.get(k.as_str()) != Some(v))
        .map(|(k, _)| k.clone())
        .collect();
    Err(HarnessError::ManifestMismatch { path: path.display().to_string(), detail: format!("differs in {}", fields.join(", ")) })
}

/// Partial files may end in a torn line after a crash; it is ignored.
fn read_partial(path: &Path) -> Result<(Option<RunManifest>, Vec<DialogueRun>), HarnessError> {
    let mut manifest = None;
    let mut runs = Vec::new();
    for l in BufReader::new(File::open(path)?).lines() {
        let l = l?;
        match serde_json::from_str::<Line>(&l) {
            Ok(Line::Manifest(m)) => manifest = Some(m),
            Ok(Line::Dialogue(d)) => runs.push(d),
            Ok(Line::Metrics(_)) => {}
            Err(e) => log::warn!("skipping unreadable line in {}: {e}", path.display()),
        }
    }
    Ok((manifest, runs))
}

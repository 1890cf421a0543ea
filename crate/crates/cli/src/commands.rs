//! One function per subcommand.
//!
//! Layout under the output directory:
//! `injected.jsonl`, `dataset/{train,eval,test}.jsonl`, `sft/`,
//! `critic-eval/<split>/`, `runs/<scenario>-seed<n>.jsonl`, `qc/`. Every
//! directory written gets a `<command>.manifest.json`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, IsTerminal, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tooleval_core::critic::{Critic, ModelCritic, OracleCritic};
use tooleval_core::dataset::{self, build_dataset, ApproxTokenCounter, LabeledDialogue, QcAnnotation, QcDecision, ReviewBatch};
use tooleval_core::dialogue::write_corpus_jsonl;
use tooleval_core::harness::{read_report, run_corpus, Assistant, ModelAssistant, RunOptions, RunReport, ScriptedAssistant};
use tooleval_core::injector::{Demonstration, InjectedDialogue, Injector, InjectorError};
use tooleval_core::metrics::{aggregate, detection_metrics, rate_f64};
use tooleval_core::review::{annotate_batch, annotate_turns, outcome_grid, outcome_percentages, review_turns, AnnotationRecord};
use tooleval_core::synth::{default_pool, generate};
use tooleval_core::{Dialogue, ErrorCategory, RolloutDatapoint, Scenario, SchemaPool};

use crate::config::{AssistantSpec, Config, CriticSpec, Endpoint, InjectionModeConfig};
use crate::error::{CliError, Result};
use crate::store::{load_corpus, load_pool, read_json, read_jsonl, to_json, to_jsonl, write, Manifest};

pub const INJECTED_FILE: &str = "injected.jsonl";

pub fn load_config(path: Option<&Path>) -> Result<Config> {
    let path = path.ok_or_else(|| CliError::validation("this command needs --config"))?;
    Config::load(path)
}

fn root(cfg: &Config, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| cfg.out_dir.clone())
}

pub fn synth(out: &Path, n: usize, seed: u64, pool_out: Option<&Path>) -> Result<()> {
    let corpus = generate(n, seed);
    let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut m = Manifest::new("synth", None, json!({ "dialogues": n, "seed": seed }));
    let name = out.file_name().ok_or_else(|| CliError::validation(format!("{} is not a file path", out.display())))?;
    m.output(&dir, &name.to_string_lossy(), &write_corpus_jsonl(&corpus))?;
    if let Some(p) = pool_out {
        let sha = write(p, &to_json(&default_pool()))?;
        m.outputs.insert(p.display().to_string(), sha);
    }
    m.save(&dir)?;
    println!("wrote {} dialogues to {}", corpus.len(), out.display());
    Ok(())
}

/// Categories in registry order, without repeats; all when none are given.
fn categories(selected: &[ErrorCategory]) -> Vec<ErrorCategory> {
    if selected.is_empty() {
        return ErrorCategory::ALL.to_vec();
    }
    ErrorCategory::ALL.into_iter().filter(|c| selected.contains(c)).collect()
}

#[derive(Serialize)]
struct InjectionFailure {
    source_id: String,
    category: ErrorCategory,
    error: String,
}

pub fn inject(cfg: &Config, out: Option<PathBuf>, seed: Option<u64>, selected: &[ErrorCategory], limit: Option<usize>) -> Result<()> {
    let root = root(cfg, out);
    let seed = seed.unwrap_or(cfg.seed);
    let volume = limit.unwrap_or(cfg.injection.volume);
    let cats = categories(selected);
    let pool = load_pool(Some(cfg))?;
    let sources = load_corpus(&cfg.corpus, &pool)?;
    let injector = Injector::new(pool.clone(), &sources).with_threshold(cfg.fuzzy_threshold);

    let mut injected = Vec::with_capacity(volume * cats.len());
    let mut failures = Vec::new();
    let endpoint = match (cfg.injection.mode, &cfg.injection.model) {
        (InjectionModeConfig::Llm, Some(spec)) => Some(spec.endpoint_with(cfg.cache_dir.as_deref())?),
        _ => None,
    };
    for c in &cats {
        // The seeded source choice is shared by both modes.
        let planned = injector.inject_corpus(&sources, *c, volume, seed)?;
        let Some(endpoint) = &endpoint else {
            injected.extend(planned);
            continue;
        };
        let chosen: BTreeSet<&str> = planned.iter().map(|p| p.provenance.source_id.as_str()).collect();
        let targets: Vec<Dialogue> = planned
            .iter()
            .map(|p| sources.iter().find(|d| d.id == p.provenance.source_id).expect("planned from sources").clone())
            .collect();
        let demos = demonstrations(&injector, &sources, &chosen, *c, cfg.injection.demonstrations, seed, &pool)?;
        let settings = cfg.injection.llm_settings(endpoint);
        for (id, res) in injector.inject_llm_corpus(&targets, *c, seed, &demos, &*endpoint.model, &settings) {
            match res {
                Ok(inj) => injected.push(inj),
                Err(InjectorError::Transport(e)) => return Err(CliError::from(e).context(format!("{id} ({c})"))),
                Err(e) => {
                    log::warn!("{id} ({c}): {e}");
                    failures.push(InjectionFailure { source_id: id, category: *c, error: e.to_string() });
                }
            }
        }
        endpoint.log_cache("injection");
    }

    let mut per_category: BTreeMap<String, usize> = BTreeMap::new();
    for inj in &injected {
        *per_category.entry(inj.label.category.name().to_string()).or_default() += 1;
    }
    let params = json!({
        "seed": seed,
        "volume": volume,
        "categories": cats.iter().map(|c| c.name()).collect::<Vec<_>>(),
        "mode": cfg.injection.mode,
        "injected": injected.len(),
        "per_category": per_category,
        "failures": failures.len(),
    });
    let mut m = Manifest::new("inject", Some(cfg), params);
    m.input(&cfg.corpus)?;
    let path = m.output(&root, INJECTED_FILE, &to_jsonl(&injected))?;
    if endpoint.is_some() {
        m.output(&root, "injection-failures.jsonl", &to_jsonl(&failures))?;
    }
    m.save(&root)?;
    println!("wrote {} injected dialogues to {}", injected.len(), path.display());
    if !failures.is_empty() {
        println!("{} injections failed; see injection-failures.jsonl", failures.len());
    }
    Ok(())
}

/// Worked examples for model-backed injection: deterministic injections of
/// the same category, taken from sources outside the injection targets when
/// there are enough of them.
fn demonstrations(
    injector: &Injector,
    sources: &[Dialogue],
    targets: &BTreeSet<&str>,
    c: ErrorCategory,
    n: usize,
    seed: u64,
    pool: &SchemaPool,
) -> Result<Vec<Demonstration>> {
    let others: Vec<Dialogue> = sources.iter().filter(|d| !targets.contains(d.id.as_str())).cloned().collect();
    let demo_seed = seed.wrapping_add(1);
    let made = match injector.inject_corpus(&others, c, n, demo_seed) {
        Ok(v) => v,
        Err(InjectorError::InsufficientSources { .. }) => {
            log::warn!("{c}: too few spare sources for demonstrations; drawing them from the targets");
            injector.inject_corpus(sources, c, n, demo_seed)?
        }
        Err(e) => return Err(e.into()),
    };
    made.iter()
        .map(|inj| {
            let src = sources.iter().find(|d| d.id == inj.provenance.source_id).expect("injected from sources");
            Demonstration::from_injection(inj, src, pool).map_err(CliError::from)
        })
        .collect()
}

pub fn build(cfg: &Config, out: Option<PathBuf>, seed: Option<u64>) -> Result<()> {
    let root = root(cfg, out);
    let spec = cfg.split.spec(seed.unwrap_or(cfg.seed)).map_err(CliError::validation)?;
    let pool = load_pool(Some(cfg))?;
    let injected_path = root.join(INJECTED_FILE);
    let injected: Vec<InjectedDialogue> = read_jsonl(&injected_path)?;
    let used: BTreeSet<&str> = injected.iter().map(|i| i.provenance.source_id.as_str()).collect();
    let all_clean = load_corpus(cfg.clean_path(), &pool)?;
    // A conversation never appears both as an injection source and as a negative.
    let clean: Vec<Dialogue> = all_clean.iter().filter(|d| !used.contains(d.id.as_str())).cloned().collect();
    if clean.len() < all_clean.len() {
        log::info!("left out {} clean dialogues that were injection sources", all_clean.len() - clean.len());
    }
    let built = build_dataset(&injected, &clean, &spec)?;

    let dir = root.join("dataset");
    let params = json!({
        "split": spec,
        "dialogues": { "train": built.dialogues[0], "eval": built.dialogues[1], "test": built.dialogues[2] },
        "items": { "train": built.train.len(), "eval": built.eval.len(), "test": built.test.len() },
        "train_positive": built.train.iter().filter(|d| d.label.category().is_some()).count(),
    });
    let mut m = Manifest::new("build", Some(cfg), params);
    m.input(&injected_path)?;
    m.input(cfg.clean_path())?;
    m.output(&dir, "train.jsonl", &to_jsonl(&built.train))?;
    m.output(&dir, "eval.jsonl", &to_jsonl(&built.eval))?;
    m.output(&dir, "test.jsonl", &to_jsonl(&built.test))?;
    m.save(&dir)?;
    println!(
        "dialogues train/eval/test {}/{}/{}; {} training items, {} eval and {} test roll-outs in {}",
        built.dialogues[0],
        built.dialogues[1],
        built.dialogues[2],
        built.train.len(),
        built.eval.len(),
        built.test.len(),
        dir.display()
    );
    Ok(())
}

pub fn export_sft(cfg: &Config, out: Option<PathBuf>) -> Result<()> {
    let root = root(cfg, out);
    let pool = load_pool(Some(cfg))?;
    let data = root.join("dataset");
    let train: Vec<LabeledDialogue> = read_jsonl(&data.join("train.jsonl"))?;
    let eval: Vec<LabeledDialogue> = read_jsonl::<RolloutDatapoint>(&data.join("eval.jsonl"))?
        .into_iter()
        .map(|p| LabeledDialogue { dialogue: p.prefix, label: p.label, origin: p.origin })
        .collect();
    let dir = root.join("sft");
    let mut m = Manifest::new("export-sft", Some(cfg), json!({ "caps": cfg.token_caps }));
    m.input(&data.join("train.jsonl"))?;
    m.input(&data.join("eval.jsonl"))?;
    let mut counts = BTreeMap::new();
    for (name, items) in [("train", &train), ("eval", &eval)] {
        let export = dataset::export_sft(items, &pool, cfg.token_caps, &ApproxTokenCounter)?;
        m.output(&dir, &format!("{name}.jsonl"), &export.to_jsonl())?;
        let dropped = json!({ "caps": export.caps, "tokenizer": export.tokenizer, "dropped": export.dropped });
        m.output(&dir, &format!("{name}.dropped.json"), &to_json(&dropped))?;
        println!("{name}: {} records, {} dropped over the token caps", export.records.len(), export.dropped.len());
        counts.insert(name, json!({ "records": export.records.len(), "dropped": export.dropped.len() }));
    }
    m.parameters["counts"] = json!(counts);
    m.save(&dir)?;
    Ok(())
}

fn build_critic(cfg: &Config, pool: &SchemaPool, references: impl FnOnce() -> Result<Vec<Dialogue>>) -> Result<(Box<dyn Critic>, Option<Endpoint>)> {
    let spec = cfg.critic.as_ref().ok_or_else(|| CliError::validation("the configuration has no `critic`"))?;
    Ok(match spec {
        CriticSpec::Oracle => (Box::new(OracleCritic::new(pool.clone(), references()?).with_threshold(cfg.fuzzy_threshold)), None),
        CriticSpec::Http(e) => {
            let ep = Endpoint::http(e, cfg.cache_dir.as_deref())?;
            let mut critic = ModelCritic::new(ep.model.clone(), pool.clone());
            critic.temperature = e.temperature;
            critic.max_tokens = e.max_tokens;
            (Box::new(critic), Some(ep))
        }
        CriticSpec::Replay { path } => {
            let ep = Endpoint::replay(path)?;
            (Box::new(ModelCritic::new(ep.model.clone(), pool.clone())), Some(ep))
        }
    })
}

#[derive(Serialize)]
struct Prediction<'a> {
    origin: &'a str,
    k: usize,
    truth: Option<ErrorCategory>,
    predicted: Option<ErrorCategory>,
    unparseable: bool,
    raw: &'a str,
}

pub fn eval_critic(cfg: &Config, out: Option<PathBuf>, split: &str, selected: &[ErrorCategory], limit: Option<usize>) -> Result<()> {
    let root = root(cfg, out);
    let pool = load_pool(Some(cfg))?;
    let input = root.join("dataset").join(format!("{split}.jsonl"));
    let mut points: Vec<RolloutDatapoint> = read_jsonl(&input)?;
    if !selected.is_empty() {
        points.retain(|p| p.label.category().is_some_and(|c| selected.contains(&c)));
    }
    if let Some(n) = limit {
        points.truncate(n);
    }
    let (critic, endpoint) = build_critic(cfg, &pool, || {
        let mut refs = load_corpus(&cfg.corpus, &pool)?;
        if cfg.clean_path() != cfg.corpus {
            refs.extend(load_corpus(cfg.clean_path(), &pool)?);
        }
        Ok(refs)
    })?;
    let verdicts = points
        .par_iter()
        .map(|p| critic.inspect(&p.prefix).map_err(|e| CliError::from(e).context(format!("{} turn {}", p.origin, p.k))))
        .collect::<Result<Vec<_>>>()?;
    if let Some(ep) = &endpoint {
        ep.log_cache("critic");
    }
    let predicted: Vec<_> = verdicts.iter().map(|v| v.category()).collect();
    let truth: Vec<_> = points.iter().map(|p| p.label.category()).collect();
    let score = detection_metrics(&predicted, &truth).map_err(|e| CliError::validation(e.to_string()))?;
    let unparseable = verdicts.iter().filter(|v| v.unparseable).count();
    let predictions: Vec<Prediction> = points
        .iter()
        .zip(&verdicts)
        .map(|(p, v)| Prediction {
            origin: &p.origin,
            k: p.k,
            truth: p.label.category(),
            predicted: v.category(),
            unparseable: v.unparseable,
            raw: &v.raw,
        })
        .collect();

    let dir = root.join("critic-eval").join(split);
    let (precision, recall) = (rate_f64(&score.precision), rate_f64(&score.recall));
    let summary = json!({
        "critic": critic.identity(),
        "datapoints": points.len(),
        "precision": precision,
        "recall": recall,
        "exact": { "precision": score.precision.to_string(), "recall": score.recall.to_string() },
        "unparseable": unparseable,
        "confusion": score.confusion,
    });
    let mut m = Manifest::new("eval-critic", Some(cfg), json!({ "split": split, "critic": critic.identity(), "limit": limit }));
    m.input(&input)?;
    m.output(&dir, "detection.json", &to_json(&summary))?;
    m.output(&dir, "confusion.csv", &score.confusion_csv())?;
    m.output(&dir, "predictions.jsonl", &to_jsonl(&predictions))?;
    m.save(&dir)?;
    println!("{} datapoints: precision {precision:.4}, recall {recall:.4} ({unparseable} unparseable)", points.len());
    Ok(())
}

fn build_assistant(cfg: &Config, corpus: &[Dialogue]) -> Result<(Box<dyn Assistant>, Option<Endpoint>, f64)> {
    let spec = cfg.assistant.as_ref().ok_or_else(|| CliError::validation("the configuration has no `assistant`"))?;
    let default_t = tooleval_core::endpoint::DEFAULT_TEMPERATURE;
    Ok(match spec {
        AssistantSpec::GroundTruth => (Box::new(ScriptedAssistant::new("ground-truth", corpus.to_vec())), None, default_t),
        AssistantSpec::Http(e) => {
            let ep = Endpoint::http(e, cfg.cache_dir.as_deref())?;
            let mut a = ModelAssistant::new(ep.model.clone());
            a.temperature = e.temperature;
            a.max_tokens = e.max_tokens;
            (Box::new(a), Some(ep), e.temperature)
        }
        AssistantSpec::Replay { path } => {
            let ep = Endpoint::replay(path)?;
            (Box::new(ModelAssistant::new(ep.model.clone())), Some(ep), default_t)
        }
    })
}

pub fn run(cfg: &Config, scenario: Scenario, seed: Option<u64>, out: Option<PathBuf>, limit: Option<usize>, resume: bool) -> Result<()> {
    let root = root(cfg, out);
    let pool = load_pool(Some(cfg))?;
    let mut corpus = load_corpus(cfg.eval_path(), &pool)?;
    if let Some(n) = limit {
        corpus.truncate(n);
    }
    let (assistant, assistant_ep, assistant_temperature) = build_assistant(cfg, &corpus)?;
    let critic = if scenario.uses_critic() {
        Some(build_critic(cfg, &pool, || Ok(corpus.clone()))?)
    } else {
        None
    };
    let critic_temperature = match &cfg.critic {
        Some(CriticSpec::Http(e)) if scenario.uses_critic() => e.temperature,
        _ => tooleval_core::endpoint::DEFAULT_TEMPERATURE,
    };
    let dir = root.join("runs");
    let options = RunOptions {
        seeds: seed.map_or_else(|| cfg.seeds.clone(), |s| vec![s]),
        threshold: cfg.fuzzy_threshold,
        miss: cfg.miss_policy,
        assistant_temperature,
        critic_temperature,
        out_dir: Some(dir.clone()),
        resume,
    };
    let reports = run_corpus(&corpus, &pool, assistant.as_ref(), critic.as_ref().map(|c| c.0.as_ref()), scenario, &options)?;
    if let Some(ep) = &assistant_ep {
        ep.log_cache("assistant");
    }
    if let Some((_, Some(ep))) = &critic {
        ep.log_cache("critic");
    }

    let params = json!({ "scenario": scenario, "seeds": options.seeds, "limit": limit, "dialogues": corpus.len() });
    let mut m = Manifest::new(&format!("run-{}", scenario.name()), Some(cfg), params);
    m.input(cfg.eval_path())?;
    for r in &reports {
        let name = RunReport::file_name(scenario, r.manifest.seed);
        m.outputs.insert(name.clone(), r.sha256());
        println!(
            "{} seed {}: success rate {:.4} over {} dialogues -> {} (sha256 {})",
            scenario.name(),
            r.manifest.seed,
            r.metrics.success_rate(),
            r.dialogues.len(),
            dir.join(&name).display(),
            r.sha256()
        );
    }
    m.save(&dir)?;
    Ok(())
}

/// Report files named on the command line, with directories expanded to
/// the reports they hold.
fn report_paths(args: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in args {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                    name.ends_with(".jsonl") && name.contains("-seed") && !name.ends_with(".annotations.jsonl")
                })
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

pub fn score(reports: &[PathBuf], annotations: &[PathBuf], out: Option<&Path>) -> Result<()> {
    if reports.is_empty() && annotations.is_empty() {
        return Err(CliError::validation("give run reports and/or --annotations"));
    }
    let mut m = Manifest::new("score", None, json!({}));
    let paths = report_paths(reports)?;
    let mut files = Vec::new();
    if !paths.is_empty() {
        let mut runs = Vec::new();
        for p in &paths {
            let r = read_report(p).map_err(|e| CliError::from(e).context(p.display()))?;
            m.input(p)?;
            runs.push(r.metrics);
        }
        let summary = aggregate(&runs);
        let text = format!("{}\n{}", summary.to_grid(), summary.profile_grid());
        print!("{text}");
        files.push(("summary.json", to_json(&summary)));
        files.push(("summary.txt", text));
    }
    if !annotations.is_empty() {
        let mut records: Vec<AnnotationRecord> = Vec::new();
        for p in annotations {
            records.extend(read_jsonl::<AnnotationRecord>(p)?);
            m.input(p)?;
        }
        let grid = outcome_grid(&records);
        print!("{grid}");
        files.push(("outcomes.json", to_json(&outcome_percentages(&records))));
        files.push(("outcomes.txt", grid));
    }
    if let Some(dir) = out {
        for (name, text) in &files {
            m.output(dir, name, text)?;
        }
        m.save(dir)?;
    }
    Ok(())
}

/// Answers come from a file when given; otherwise stdin must be a terminal.
fn answer_source(answers: Option<&Path>) -> Result<Box<dyn BufRead>> {
    match answers {
        Some(p) => Ok(Box::new(BufReader::new(File::open(p).map_err(|e| CliError::validation(format!("{}: {e}", p.display())))?))),
        None if io::stdin().is_terminal() => Ok(Box::new(io::stdin().lock())),
        None => Err(CliError::validation("review mode needs a terminal on stdin, or --answers FILE")),
    }
}

pub fn review(
    report_path: &Path,
    out: Option<PathBuf>,
    annotator: &str,
    all: bool,
    limit: Option<usize>,
    answers: Option<&Path>,
) -> Result<()> {
    let report = read_report(report_path).map_err(|e| CliError::from(e).context(report_path.display()))?;
    let mut turns = review_turns(&report, !all);
    if let Some(n) = limit {
        turns.truncate(n);
    }
    let out = out.unwrap_or_else(|| report_path.with_extension("annotations.jsonl"));
    let mut input = answer_source(answers)?;
    let records = annotate_turns(&turns, annotator, &mut input, &mut io::stdout().lock())?;
    if records.len() < turns.len() {
        log::warn!("input ended after {} of {} turns", records.len(), turns.len());
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut file = OpenOptions::new().create(true).append(true).open(&out)?;
    file.write_all(to_jsonl(&records).as_bytes())?;
    println!("\nrecorded {} annotations in {}", records.len(), out.display());
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct QcFile {
    category: ErrorCategory,
    batch: String,
    annotations: Vec<QcAnnotation>,
}

pub fn qc_sample(cfg: &Config, category: ErrorCategory, n: usize, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let root = root(cfg, out);
    let pool = load_pool(Some(cfg))?;
    let injected_path = root.join(INJECTED_FILE);
    let injected: Vec<InjectedDialogue> = read_jsonl(&injected_path)?;
    let seed = seed.unwrap_or(cfg.seed);
    let batch = dataset::qc_sample(&injected, category, n, seed, &pool)?;
    let dir = root.join("qc");
    let mut m = Manifest::new(&format!("qc-sample-{}", category.name()), Some(cfg), json!({ "category": category, "size": n, "seed": seed }));
    m.input(&injected_path)?;
    let path = m.output(&dir, &format!("{}.batch.json", category.name()), &to_json(&batch))?;
    m.save(&dir)?;
    println!("wrote a batch of {} {category} samples to {}", batch.items.len(), path.display());
    Ok(())
}

pub fn qc_annotate(batch_path: &Path, annotator: &str, out: Option<PathBuf>, answers: Option<&Path>) -> Result<()> {
    let batch: ReviewBatch = read_json(batch_path)?;
    let mut input = answer_source(answers)?;
    let annotations = annotate_batch(&batch, annotator, &mut input, &mut io::stdout().lock())?;
    if annotations.len() < batch.items.len() {
        log::warn!("input ended after {} of {} samples", annotations.len(), batch.items.len());
    }
    let out = out.unwrap_or_else(|| {
        let name = batch_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        batch_path.with_file_name(name.trim_end_matches(".json").trim_end_matches(".batch").to_string() + ".annotations.json")
    });
    let file = QcFile { category: batch.category, batch: batch_path.display().to_string(), annotations };
    write(&out, &to_json(&file))?;
    println!("\nrecorded {} judgements in {}", file.annotations.len(), out.display());
    Ok(())
}

pub fn qc_decide(files: &[PathBuf]) -> Result<()> {
    if files.is_empty() {
        return Err(CliError::validation("give at least one annotation file"));
    }
    for p in files {
        let f: QcFile = read_json(p)?;
        let bad = f.annotations.iter().filter(|a| !a.follows_definition).count();
        let decision = match dataset::qc_decide(&f.annotations) {
            QcDecision::Pass => "pass",
            QcDecision::Regenerate => "regenerate",
        };
        println!("{}: {decision} ({bad} of {} off-definition)", f.category, f.annotations.len());
    }
    Ok(())
}


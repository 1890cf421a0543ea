//! Acceptance suite. Runs every criterion, prints one PASS/FAIL/SKIP line per
//! criterion and exits non-zero if any failed.
//!
//! Criterion 8 talks to live endpoints and only runs when
//! `TOOLEVAL_ASSISTANT_URL` and `TOOLEVAL_CRITIC_URL` are set
//! (`TOOLEVAL_AUTH_ENV` optionally names the variable holding an API key).

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{bus, lcs_oracle, lev_oracle, HistorySpy, Recorder, ScriptedAssistantModel, ScriptedCriticModel};
use tooleval_core::critic::{oracle_critic, render_api_pool, ModelCritic, OracleCritic, NO_ERROR_SENTENCE};
use tooleval_core::dataset::{
    build_dataset, export_sft, rollout_expand, ApproxTokenCounter, BuiltDataset, Label, SplitSpec, TokenCaps, TokenCounter,
};
use tooleval_core::dialogue::{parse_dialogue, render_dialogue, teacher_forced_context};
use tooleval_core::endpoint::{EndpointConfig, HttpModel};
use tooleval_core::harness::{run_corpus, Counting, ModelAssistant, RunOptions, ScriptedAssistant};
use tooleval_core::injector::{verify_provenance, InjectedDialogue, Injector, Templates};
use tooleval_core::metrics::{
    aggregate, detection_metrics, dialogue_metrics, fuzzy_score, lcs_len, levenshtein, normalize, rouge_l, rouge_tokens, Rate,
    DEFAULT_FUZZY_THRESHOLD, METRIC_NAMES,
};
use tooleval_core::synth::{default_pool, generate};
use tooleval_core::{AssistantAction, Dialogue, ErrorCategory, LabeledDialogue, Scenario, SchemaPool, ToolCall, ToolResult};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

enum Status {
    Pass(String),
    Fail(String),
    Skip(String),
}

/// Everything the dataset criteria share: 600 sources, 2400 injections, and
/// a separate clean pool.
struct Corpus {
    pool: SchemaPool,
    sources: Vec<Dialogue>,
    clean: Vec<Dialogue>,
    injected: Vec<InjectedDialogue>,
    build_time: Duration,
}

fn corpus() -> Corpus {
    let t = Instant::now();
    let pool = default_pool();
    let sources = generate(600, 11);
    let clean = generate(2600, 12);
    let injector = Injector::new(pool.clone(), &sources);
    let injected = injector.inject_all(&sources, 300, 5).expect("enough viable sources");
    Corpus { pool, sources, clean, injected, build_time: t.elapsed() }
}

fn c1_round_trip() -> Outcome {
    let pool = default_pool();
    let corpus = generate(60, 1);
    let (mut rows, mut singles, mut diffs) = (0, 0, 0);
    for d in &corpus {
        for t in &d.turns {
            match t.assistant.tool_turn().map(|t| &t.result) {
                Some(ToolResult::Rows(_)) => rows += 1,
                Some(ToolResult::Single(_)) => singles += 1,
                None => {}
            }
        }
        let text = render_dialogue(d, d.len(), &pool).map_err(|e| e.to_string())?;
        let back = parse_dialogue(&d.id, &text, &pool).map_err(|e| format!("{}: {e}", d.id))?;
        let again = render_dialogue(&back, back.len(), &pool).map_err(|e| e.to_string())?;
        diffs += usize::from(back != *d || again != text);
    }
    let (b, bus_pool) = bus();
    let bus_text = render_dialogue(&b, b.len(), &bus_pool).map_err(|e| e.to_string())?;
    diffs += usize::from(bus_text != common::BUS_TEXT);
    ensure!(rows > 0 && singles > 0, "fixture lacks a tool-turn shape: {rows} row results, {singles} single results");
    ensure!(diffs == 0, "{diffs} dialogues differ after parse(render(.))");
    Ok(format!("{} dialogues, {rows} row-list and {singles} single-record tool turns, 0 diffs", corpus.len() + 1))
}

fn c2_closure() -> Outcome {
    let pool = default_pool();
    let corpus = generate(200, 21);
    let injector = Injector::new(pool.clone(), &corpus);
    let sources: Vec<&Dialogue> =
        corpus.iter().filter(|d| ErrorCategory::ALL.iter().all(|&c| !injector.viable_sites(d, c).is_empty())).take(48).collect();
    ensure!(sources.len() >= 40, "only {} sources admit all eight categories", sources.len());
    let templates = Templates::default();
    let mut n = 0;
    for src in &sources {
        for c in ErrorCategory::ALL {
            let hint = injector.make_hint(src, c, 3).map_err(|e| e.to_string())?;
            let inj = injector.inject_deterministic(src, &hint).map_err(|e| format!("{} {c}: {e}", src.id))?;
            let k = inj.provenance.error_turn;
            let d = &inj.dialogue;
            ensure!(verify_provenance(&inj, src, &pool), "{}: provenance does not verify", d.id);
            ensure!(
                d.len() == k
                    && d.turns[..k - 1] == src.turns[..k - 1]
                    && d.turns[k - 1].user == src.turns[k - 1].user
                    && d.turns[k - 1].assistant != src.turns[k - 1].assistant,
                "{}: not exactly one corrupted assistant turn",
                d.id
            );
            let v = oracle_critic(d, src, &pool, &templates, DEFAULT_FUZZY_THRESHOLD).map_err(|e| e.to_string())?;
            ensure!(v.category() == Some(c), "{}: oracle says {:?}, injected {c}", d.id, v.category());
            n += 1;
        }
    }
    Ok(format!("{} sources x 8 categories = {n} injections, oracle recovers 100%", sources.len()))
}

fn count_labels(items: &[LabeledDialogue]) -> (usize, usize) {
    let pos = items.iter().filter(|d| d.label.category().is_some()).count();
    (pos, items.len() - pos)
}

fn c3_dataset(c: &Corpus) -> Outcome {
    let t = Instant::now();
    ensure!(c.injected.len() == 2400, "injected corpus has {} items", c.injected.len());
    for cat in ErrorCategory::ALL {
        let n = c.injected.iter().filter(|i| i.label.category == cat).count();
        ensure!(n == 300, "{cat}: {n} injections");
    }
    let spec = SplitSpec::standard(7);
    let built = build_dataset(&c.injected, &c.clean, &spec).map_err(|e| e.to_string())?;
    let again = build_dataset(&c.injected, &c.clean, &spec).map_err(|e| e.to_string())?;
    ensure!(built == again, "two builds with the same seed differ");
    ensure!(built.dialogues == [3360, 720, 720], "split sizes {:?}", built.dialogues);
    let (pos, neg) = count_labels(&built.train);
    ensure!(pos == neg && pos == 1680, "train split has {pos} positives and {neg} negatives");
    for cat in ErrorCategory::ALL {
        let n = built.train.iter().filter(|d| d.label.category() == Some(cat)).count();
        ensure!(n == 210, "{cat}: {n} training items, expected 210");
    }
    check_rollouts(&built)?;

    let heavy = build_dataset(&c.injected, &c.clean, &SplitSpec::train_heavy(7)).map_err(|e| e.to_string())?;
    let (hp, hn) = count_labels(&heavy.train);
    ensure!(hp == 1800 && hn == 1800, "train-heavy split has {hp}/{hn}");

    for d in c.injected.iter().take(50) {
        let item = LabeledDialogue::injected(d);
        let points = rollout_expand(&item);
        ensure!(points.len() == d.dialogue.len(), "{}: {} roll-out points", d.dialogue.id, points.len());
        let errors: Vec<usize> = points.iter().filter(|p| p.label.category().is_some()).map(|p| p.k).collect();
        ensure!(errors == vec![d.dialogue.len()], "{}: error labels at {errors:?}", d.dialogue.id);
    }
    let elapsed = t.elapsed() + c.build_time;
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("2400 injected, splits {:?}, train 1680/1680, train-heavy 1800/1800, {elapsed:.1?}", built.dialogues))
}

fn check_rollouts(built: &BuiltDataset) -> Result<(), String> {
    for part in [&built.eval, &built.test] {
        let mut by_origin: BTreeMap<&str, Vec<(usize, &Label)>> = BTreeMap::new();
        for p in part.iter() {
            by_origin.entry(&p.origin).or_default().push((p.k, &p.label));
        }
        for (origin, mut points) in by_origin {
            points.sort_by_key(|p| p.0);
            let ks: Vec<usize> = points.iter().map(|p| p.0).collect();
            ensure!(ks == (1..=ks.len()).collect::<Vec<_>>(), "{origin}: roll-out turns {ks:?}");
            let flagged = points.iter().filter(|p| p.1.category().is_some()).count();
            let last_flagged = points.last().is_some_and(|p| p.1.category().is_some());
            ensure!(flagged == usize::from(last_flagged), "{origin}: error label not only on the last prefix");
        }
    }
    Ok(())
}

fn c4_sft(c: &Corpus) -> Outcome {
    let built = build_dataset(&c.injected, &c.clean, &SplitSpec::standard(7)).map_err(|e| e.to_string())?;
    let counter = ApproxTokenCounter;
    let export = export_sft(&built.train, &c.pool, TokenCaps::default(), &counter).map_err(|e| e.to_string())?;
    ensure!(export.records.len() + export.dropped.len() == built.train.len(), "records and drops do not add up");
    let pool_text = render_api_pool(&c.pool);
    for r in &export.records {
        for cat in ErrorCategory::ALL {
            ensure!(r.prompt.contains(cat.description()), "{}: prompt lacks the {cat} description", r.meta.origin);
        }
        ensure!(r.prompt.contains(&pool_text), "{}: prompt lacks the tool pool", r.meta.origin);
        match r.meta.category {
            None => ensure!(r.completion == NO_ERROR_SENTENCE, "{}: no-error completion differs", r.meta.origin),
            Some(c) => ensure!(r.completion.starts_with(c.name()), "{}: completion lacks its category", r.meta.origin),
        }
    }

    // A prompt cap at the median size forces drops; every drop must be over
    // a cap and every kept record under both.
    let mut sizes: Vec<usize> = export.records.iter().map(|r| counter.count(&r.prompt)).collect();
    sizes.sort_unstable();
    let caps = TokenCaps { prompt: sizes[sizes.len() / 2], completion: 120 };
    let tight = export_sft(&built.train, &c.pool, caps, &counter).map_err(|e| e.to_string())?;
    ensure!(!tight.dropped.is_empty(), "tight caps dropped nothing");
    ensure!(tight.records.len() + tight.dropped.len() == built.train.len(), "tight export does not add up");
    ensure!(
        tight.dropped.iter().all(|d| d.prompt_tokens > caps.prompt || d.completion_tokens > caps.completion),
        "a dropped record is within both caps"
    );
    ensure!(
        tight.records.iter().all(|r| counter.count(&r.prompt) <= caps.prompt && counter.count(&r.completion) <= caps.completion),
        "a kept record exceeds a cap"
    );
    let over = built
        .train
        .iter()
        .filter(|d| {
            let prompt = tooleval_core::critic::build_critic_prompt(&d.dialogue, &c.pool).unwrap();
            counter.count(&prompt) > caps.prompt || counter.count(&d.label.completion()) > caps.completion
        })
        .count();
    ensure!(over == tight.dropped.len(), "{over} items over the caps but {} dropped", tight.dropped.len());
    Ok(format!(
        "{} records at default caps ({} dropped); tight caps drop {} of {}",
        export.records.len(),
        export.dropped.len(),
        tight.dropped.len(),
        built.train.len()
    ))
}

fn random_text(rng: &mut ChaCha8Rng, alphabet: &[&str], max: usize, sep: &str) -> String {
    let n = rng.random_range(0..=max);
    (0..n).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect::<Vec<_>>().join(sep)
}

fn metric_fixture() -> (Dialogue, SchemaPool) {
    let (_, pool) = bus();
    let find = ToolCall::new("FindBus")
        .arg("from_location", "Vancouver")
        .arg("to_location", "Seattle")
        .arg("leaving_date", "2019-03-12")
        .arg("travelers", "1");
    let buy = ToolCall::new("BuyBusTicket")
        .arg("from_location", "Vancouver")
        .arg("to_location", "Seattle")
        .arg("leaving_date", "2019-03-12")
        .arg("leaving_time", "06:40")
        .arg("travelers", "1");
    let gt = Dialogue::from_pairs(
        "metrics",
        [
            ("I need a bus.", AssistantAction::response("Where from and where to?")),
            ("Vancouver to Seattle on the 12th, one person.", AssistantAction::tool(find, ToolResult::empty(), "Found some.")),
            ("Tell me more.", AssistantAction::response("It leaves at 6:40.")),
            ("Book it.", AssistantAction::tool(buy, ToolResult::Single(BTreeMap::new()), "Booked.")),
        ],
    );
    (gt, pool)
}

fn with_arg(a: &AssistantAction, name: &str, value: Option<&str>) -> AssistantAction {
    let mut t = a.tool_turn().unwrap().clone();
    match value {
        Some(v) => t.call.args.insert(name.into(), v.into()),
        None => t.call.args.remove(name),
    };
    AssistantAction::Tool(t)
}

fn c5_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let letters = ["a", "b", "c", "A", " ", ".", "é", "x"];
    let words = ["the", "bus", "Bus", "leaves", "at", "6:40", "am", "seattle.", "ok", "to"];
    for i in 0..1000 {
        let (a, b) = (random_text(&mut rng, &letters, 14, ""), random_text(&mut rng, &letters, 14, ""));
        let (ac, bc): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        ensure!(levenshtein(&ac, &bc) == lev_oracle(&ac, &bc), "pair {i}: levenshtein({a:?}, {b:?})");
        let (na, nb): (Vec<char>, Vec<char>) = (normalize(&a).chars().collect(), normalize(&b).chars().collect());
        let longest = na.len().max(nb.len());
        let want = if longest == 0 { 1.0 } else { 1.0 - lev_oracle(&na, &nb) as f64 / longest as f64 };
        ensure!(fuzzy_score(&a, &b) == want, "pair {i}: fuzzy_score({a:?}, {b:?})");

        let (c, r) = (random_text(&mut rng, &words, 12, " "), random_text(&mut rng, &words, 12, " "));
        let (ct, rt) = (rouge_tokens(&c), rouge_tokens(&r));
        let lcs = lcs_oracle(&ct, &rt);
        ensure!(lcs_len(&ct, &rt) == lcs, "pair {i}: lcs({c:?}, {r:?})");
        let s = rouge_l(&c, &r);
        let (p, rec) = match (ct.len(), rt.len()) {
            (0, 0) => (1.0, 1.0),
            (0, _) | (_, 0) => (0.0, 0.0),
            (n, m) => (lcs as f64 / n as f64, lcs as f64 / m as f64),
        };
        let f1 = if p + rec > 0.0 { 2.0 * p * rec / (p + rec) } else { 0.0 };
        ensure!(s.precision == p && s.recall == rec && s.f1 == f1, "pair {i}: rouge_l({c:?}, {r:?})");
    }

    let (gt, pool) = metric_fixture();
    let truth: Vec<AssistantAction> = gt.turns.iter().map(|t| t.assistant.clone()).collect();
    let find = truth[1].clone();
    let buy = truth[3].clone();
    let set = |i: usize, a: AssistantAction| {
        let mut v = truth.clone();
        v[i] = a;
        v
    };
    let plain = AssistantAction::response("Sure.");
    let taxi = AssistantAction::tool(ToolCall::new("BookTaxi").arg("to", "airport"), ToolResult::empty(), "ok");
    let r = |n: u64, d: u64| Ratio::new(n, d);
    // (name, finals, precision, recall, incorrect action rate, success)
    type Fixture = (&'static str, Vec<AssistantAction>, Rate, Rate, Rate, bool);
    let fixtures: Vec<Fixture> = vec![
        ("perfect replay", truth.clone(), r(1, 1), r(1, 1), r(0, 1), true),
        ("extra passive search", set(0, find.clone()), r(2, 3), r(1, 1), r(0, 1), true),
        ("wrong booking time", set(3, with_arg(&buy, "leaving_time", Some("08:10"))), r(1, 2), r(1, 2), r(1, 1), false),
        ("no calls at all", set(3, plain.clone()).into_iter().enumerate().map(|(i, a)| if i == 1 { plain.clone() } else { a }).collect(), r(1, 1), r(0, 1), r(0, 1), false),
        ("typo within threshold", set(1, with_arg(&find, "from_location", Some("Vancuver"))), r(1, 1), r(1, 1), r(0, 1), true),
        ("wrong search city", set(1, with_arg(&find, "from_location", Some("Portland"))), r(1, 2), r(1, 2), r(0, 1), false),
        ("extra booking", set(2, buy.clone()), r(2, 3), r(1, 1), r(1, 2), false),
        ("unknown tool", set(0, taxi), r(2, 3), r(1, 1), r(1, 2), false),
        ("dropped optional argument", set(1, with_arg(&find, "travelers", None)), r(1, 2), r(1, 2), r(0, 1), false),
        ("booking one turn early", { let mut v = set(2, buy.clone()); v[3] = plain.clone(); v }, r(1, 2), r(1, 2), r(1, 1), false),
    ];
    for (name, finals, p, rc, iar, success) in &fixtures {
        let s = dialogue_metrics(finals, &gt, &pool, DEFAULT_FUZZY_THRESHOLD).map_err(|e| e.to_string())?;
        ensure!(
            s.precision == *p && s.recall == *rc && s.incorrect_action_rate == *iar && s.is_success() == *success,
            "{name}: got P={} R={} IAR={} success={}",
            s.precision,
            s.recall,
            s.incorrect_action_rate,
            s.is_success()
        );
    }

    let mut pred = Vec::new();
    let mut truth_labels = Vec::new();
    for _ in 0..500 {
        let pick = |rng: &mut ChaCha8Rng| {
            let i = rng.random_range(0..9usize);
            (i < 8).then(|| ErrorCategory::ALL[i])
        };
        pred.push(pick(&mut rng));
        truth_labels.push(pick(&mut rng));
    }
    let d = detection_metrics(&pred, &truth_labels).map_err(|e| e.to_string())?;
    let m = &d.confusion;
    let tp: u64 = (0..8).flat_map(|t| (0..8).map(move |p| (t, p))).map(|(t, p)| m[t][p]).sum();
    let fp: u64 = (0..8).map(|p| m[8][p]).sum();
    let fn_: u64 = (0..8).map(|t| m[t][8]).sum();
    ensure!(d.precision == Ratio::new(tp, tp + fp) && d.recall == Ratio::new(tp, tp + fn_), "detection rates disagree with the matrix");
    Ok(format!("1000 random pairs exact, {} hand-computed fixtures, detection P={} R={}", fixtures.len(), d.precision, d.recall))
}

/// Errors the scripted assistant makes on its first attempt: one injected
/// category per dialogue, cycling through all eight.
fn harness_fixture() -> (Vec<Dialogue>, SchemaPool, BTreeMap<(String, usize), AssistantAction>) {
    let pool = default_pool();
    let corpus = generate(8, 31);
    let injector = Injector::new(pool.clone(), &corpus);
    let mut errors = BTreeMap::new();
    for (i, d) in corpus.iter().enumerate() {
        let c = ErrorCategory::ALL[i % 8];
        if let Ok(h) = injector.make_hint(d, c, 1) {
            let inj = injector.inject_deterministic(d, &h).expect("hinted injection applies");
            errors.insert((d.id.clone(), h.turn), inj.dialogue.turns[h.turn - 1].assistant.clone());
        }
    }
    (corpus, pool, errors)
}

fn c6_harness() -> Outcome {
    let (corpus, pool, errors) = harness_fixture();
    let turns: u64 = corpus.iter().map(|d| d.len() as u64).sum();
    let a_rec = Recorder::new(ScriptedAssistantModel::new(&corpus, &pool, errors.clone()));
    let c_rec = Recorder::new(ScriptedCriticModel::new(&corpus, &pool));
    {
        let assistant = ModelAssistant::new(&a_rec);
        let critic = ModelCritic::new(&c_rec, pool.clone());
        for s in Scenario::ALL {
            run_corpus(&corpus, &pool, &assistant, Some(&critic), s, &RunOptions { seeds: vec![0], ..Default::default() })
                .map_err(|e| format!("recording {s}: {e}"))?;
        }
    }
    let a_replay = a_rec.replay("assistant");
    let c_replay = c_rec.replay("critic");

    let mut hashes: BTreeMap<Scenario, Vec<String>> = BTreeMap::new();
    let mut revisions = 0;
    for s in Scenario::ALL {
        for _ in 0..2 {
            let assistant = HistorySpy::new(Counting::new(ModelAssistant::new(&a_replay)));
            let critic = ModelCritic::new(&c_replay, pool.clone());
            let reports = run_corpus(&corpus, &pool, &assistant, Some(&critic), s, &RunOptions::default())
                .map_err(|e| format!("{s}: {e}"))?;
            hashes.entry(s).or_default().push(reports.iter().map(|r| r.sha256()).collect::<Vec<_>>().join(","));
            let counted = assistant.inner.acts() + assistant.inner.critiques();
            for report in &reports {
                for d in &report.dialogues {
                    for r in &d.records {
                        match s {
                            Scenario::Baseline => ensure!(r.critic_calls == 0 && r.assistant_calls == 1, "baseline turn {} of {}", r.k, d.dialogue_id),
                            Scenario::SelfCorrection => ensure!(r.assistant_calls == 3 && r.critic_calls == 0, "self-correction turn {} of {}", r.k, d.dialogue_id),
                            _ => {
                                ensure!(r.critic_calls <= 1, "{s}: {} critic calls", r.critic_calls);
                                ensure!(r.assistant_calls <= 2 && (r.revised.is_some() == (r.assistant_calls == 2)), "{s}: more than one revision");
                                revisions += u64::from(r.revised.is_some());
                            }
                        }
                    }
                }
            }
            let per_turn = if s == Scenario::SelfCorrection { 3 } else { 1 };
            let seeds = reports.len() as u64;
            if s != Scenario::ErrorOnlyFeedback && s != Scenario::FullFeedback {
                ensure!(counted == per_turn * turns * seeds, "{s}: {counted} assistant invocations for {turns} turns x {seeds} seeds");
            }
            for (id, k, history) in assistant.seen.lock().unwrap().iter() {
                let gt = corpus.iter().find(|d| d.id == *id).unwrap();
                let full = render_dialogue(gt, *k, &pool).map_err(|e| e.to_string())?;
                ensure!(full.starts_with(history.as_str()), "{id} turn {k}: history is not a ground-truth render");
                if *k > 1 {
                    let before = render_dialogue(gt, k - 1, &pool).map_err(|e| e.to_string())?;
                    ensure!(history.starts_with(&before), "{id} turn {k}: history does not start with turns 1..{}", k - 1);
                }
                ensure!(*history == teacher_forced_context(gt, *k, &pool).unwrap(), "{id} turn {k}: history differs");
            }
        }
    }
    for (s, h) in &hashes {
        ensure!(h[0] == h[1], "{s}: report hashes differ between identical runs");
    }
    ensure!(revisions > 0, "the feedback scenarios never revised anything");
    Ok(format!(
        "{} dialogues, {turns} turns, {} errors; call budgets hold, histories byte-identical, hashes stable, {revisions} revisions",
        corpus.len(),
        errors.len()
    ))
}

fn c7_pipeline(c: &Corpus) -> Outcome {
    let t = Instant::now();
    // Each injection becomes a ground-truth dialogue (its full source under
    // the injection's id) and an assistant error at the injected turn.
    let by_id: BTreeMap<&str, &Dialogue> = c.sources.iter().map(|d| (d.id.as_str(), d)).collect();
    let mut gts = Vec::new();
    let mut scripted = Vec::new();
    for inj in &c.injected {
        let src = by_id[inj.provenance.source_id.as_str()];
        let k = inj.provenance.error_turn;
        gts.push(Dialogue { id: inj.dialogue.id.clone(), turns: src.turns.clone() });
        scripted.push((inj.dialogue.id.clone(), k, inj.dialogue.turns[k - 1].assistant.clone(), inj.label.category));
    }
    let mut assistant = ScriptedAssistant::new("injected-errors", gts.clone());
    for (id, k, action, _) in &scripted {
        assistant = assistant.with_override(id.clone(), *k, action.clone());
    }
    let critic = OracleCritic::new(c.pool.clone(), gts.clone());
    let options = RunOptions { seeds: vec![0], ..Default::default() };
    let base = run_corpus(&gts, &c.pool, &assistant, None, Scenario::Baseline, &options).map_err(|e| e.to_string())?;
    let full = run_corpus(&gts, &c.pool, &assistant, Some(&critic), Scenario::FullFeedback, &options).map_err(|e| e.to_string())?;
    let (base, full) = (&base[0], &full[0]);
    let elapsed = t.elapsed();

    let category: BTreeMap<&str, ErrorCategory> = scripted.iter().map(|s| (s.0.as_str(), s.3)).collect();
    let mut still_ok: BTreeMap<ErrorCategory, usize> = BTreeMap::new();
    for d in base.dialogues.iter().filter(|d| d.score.is_success()) {
        *still_ok.entry(category[d.dialogue_id.as_str()]).or_default() += 1;
    }
    let breakdown: Vec<String> = still_ok.iter().map(|(c, n)| format!("{c} {n}/300")).collect();
    let (b, f) = (base.metrics.success_rate(), full.metrics.success_rate());
    let summary = format!(
        "{} dialogues: FullFeedback success {f:.4}, Baseline success {b:.4}, {elapsed:.1?}",
        gts.len()
    );
    ensure!(f == 1.0, "{summary}; FullFeedback should succeed everywhere");
    ensure!(elapsed < Duration::from_secs(120), "{summary}; over the 2 minute budget");
    ensure!(
        b == 0.0,
        "{summary}; Baseline should be 0.0 but these injected errors leave every required call matched: {}",
        breakdown.join(", ")
    );
    Ok(summary)
}

fn c8_live() -> Result<Status, String> {
    let (Ok(a_url), Ok(c_url)) = (std::env::var("TOOLEVAL_ASSISTANT_URL"), std::env::var("TOOLEVAL_CRITIC_URL")) else {
        return Ok(Status::Skip("set TOOLEVAL_ASSISTANT_URL and TOOLEVAL_CRITIC_URL to run".into()));
    };
    let auth = std::env::var("TOOLEVAL_AUTH_ENV").ok();
    let config = |url: String| EndpointConfig { auth_env: auth.clone(), ..EndpointConfig::new(url) };
    let (d, pool) = bus();
    let assistant = ModelAssistant::new(HttpModel::new(config(a_url)).map_err(|e| e.to_string())?);
    let critic = ModelCritic::remote(config(c_url), pool.clone()).map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for s in Scenario::ALL {
        let reports = run_corpus(std::slice::from_ref(&d), &pool, &assistant, Some(&critic), s, &RunOptions::default())
            .map_err(|e| format!("{s}: {e}"))?;
        runs.extend(reports.into_iter().map(|r| r.metrics));
    }
    let summary = aggregate(&runs);
    ensure!(summary.rows.len() == 4, "{} scenario rows", summary.rows.len());
    for row in &summary.rows {
        ensure!(row.seeds.len() == 2, "{}: {} seeds", row.scenario, row.seeds.len());
        ensure!(METRIC_NAMES.iter().all(|m| row.metrics[*m].n == 2), "{}: incomplete metrics", row.scenario);
    }
    println!("{}", summary.to_grid());
    Ok(Status::Pass("one dialogue through all four scenarios, mean ± std over 2 seeds".into()))
}

fn run(f: impl FnOnce() -> Outcome) -> Status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => Status::Pass(s),
        Ok(Err(e)) => Status::Fail(e),
        Err(p) => Status::Fail(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()),
    }
}

fn main() {
    let shared = corpus();
    let results = [
        ("format round-trip", run(c1_round_trip)),
        ("injector/oracle closure", run(c2_closure)),
        ("dataset arithmetic", run(|| c3_dataset(&shared))),
        ("SFT export", run(|| c4_sft(&shared))),
        ("metrics vs oracles", run(c5_metrics)),
        ("harness contracts", run(c6_harness)),
        ("end-to-end oracle pipeline", run(|| c7_pipeline(&shared))),
        ("live endpoints", match catch_unwind(c8_live) {
            Ok(Ok(s)) => s,
            Ok(Err(e)) => Status::Fail(e),
            Err(_) => Status::Fail("panicked".into()),
        }),
    ];
    let mut failed = 0;
    println!();
    for (i, (name, status)) in results.iter().enumerate() {
        let (tag, detail) = match status {
            Status::Pass(d) => ("PASS", d),
            Status::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Status::Skip(d) => ("SKIP", d),
        };
        println!("criterion {} {name}: {tag} - {detail}", i + 1);
    }
    println!();
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}

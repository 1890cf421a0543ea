use std::fs;

use tooleval_core::critic::OracleCritic;
use tooleval_core::harness::{read_report, run_corpus, HarnessError, RunOptions, RunReport, ScriptedAssistant};
use tooleval_core::injector::Injector;
use tooleval_core::synth::{default_pool, generate};
use tooleval_core::{ErrorCategory, Scenario};

fn options(dir: &std::path::Path, resume: bool) -> RunOptions {
    RunOptions { seeds: vec![0, 1], out_dir: Some(dir.to_path_buf()), resume, ..Default::default() }
}

#[test]
fn reports_persist_and_resume() {
    let pool = default_pool();
    let corpus = generate(6, 4);
    let assistant = ScriptedAssistant::new("gt", corpus.clone());
    let critic = OracleCritic::new(pool.clone(), corpus.clone());
    let dir = tempfile::tempdir().unwrap();

    let first = run_corpus(&corpus, &pool, &assistant, Some(&critic), Scenario::FullFeedback, &options(dir.path(), false)).unwrap();
    assert_eq!(first.len(), 2);
    let path = dir.path().join(RunReport::file_name(Scenario::FullFeedback, 1));
    assert!(path.exists());
    assert!(!dir.path().join(format!("{}.partial", RunReport::file_name(Scenario::FullFeedback, 1))).exists());
    assert_eq!(read_report(&path).unwrap(), first[1]);
    assert_eq!(first[0].metrics.success_rate(), 1.0);
    assert_eq!(first[0].metrics.profile[8], corpus.iter().map(|d| d.len() as u64).sum::<u64>());

    // A finished report is reused as is.
    let again = run_corpus(&corpus, &pool, &assistant, Some(&critic), Scenario::FullFeedback, &options(dir.path(), true)).unwrap();
    assert_eq!(again, first);

    // Partial progress with a torn last line picks up where it stopped.
    let text = first[0].to_jsonl();
    let lines: Vec<&str> = text.lines().collect();
    let partial = format!("{}\n{}\n{{\"dialogue\": {{\"dial", lines[0], lines[1]);
    let final_path = dir.path().join(RunReport::file_name(Scenario::FullFeedback, 0));
    fs::remove_file(&final_path).unwrap();
    fs::write(dir.path().join(format!("{}.partial", RunReport::file_name(Scenario::FullFeedback, 0))), partial).unwrap();
    let resumed = run_corpus(&corpus, &pool, &assistant, Some(&critic), Scenario::FullFeedback, &options(dir.path(), true)).unwrap();
    assert_eq!(resumed[0].sha256(), first[0].sha256());
}

#[test]
fn resume_refuses_a_different_configuration() {
    let pool = default_pool();
    let corpus = generate(3, 4);
    let assistant = ScriptedAssistant::new("gt", corpus.clone());
    let dir = tempfile::tempdir().unwrap();
    run_corpus(&corpus, &pool, &assistant, None, Scenario::Baseline, &options(dir.path(), false)).unwrap();
    let other = ScriptedAssistant::new("other", corpus.clone());
    let err = run_corpus(&corpus, &pool, &other, None, Scenario::Baseline, &options(dir.path(), true)).unwrap_err();
    assert!(matches!(err, HarnessError::ManifestMismatch { ref detail, .. } if detail.contains("assistant")), "{err}");
}

#[test]
fn invalid_runs_are_rejected() {
    let pool = default_pool();
    let mut corpus = generate(3, 4);
    let assistant = ScriptedAssistant::new("gt", corpus.clone());
    let no_files = RunOptions::default();
    let err = run_corpus(&corpus, &pool, &assistant, None, Scenario::ErrorOnlyFeedback, &no_files).unwrap_err();
    assert!(matches!(err, HarnessError::MissingCritic(Scenario::ErrorOnlyFeedback)));
    corpus.push(corpus[0].clone());
    let err = run_corpus(&corpus, &pool, &assistant, None, Scenario::Baseline, &no_files).unwrap_err();
    assert!(err.to_string().contains("duplicate"), "{err}");
}

#[test]
fn error_only_feedback_still_fixes_scripted_errors() {
    let pool = default_pool();
    let corpus = generate(30, 8);
    let injector = Injector::new(pool.clone(), &corpus);
    let mut assistant = ScriptedAssistant::new("errors", corpus.clone());
    let mut n = 0;
    for d in &corpus {
        if let Ok(h) = injector.make_hint(d, ErrorCategory::NonInvocationHesitation, 0) {
            let inj = injector.inject_deterministic(d, &h).unwrap();
            assistant = assistant.with_override(d.id.clone(), h.turn, inj.dialogue.turns[h.turn - 1].assistant.clone());
            n += 1;
        }
    }
    assert!(n > 20);
    let critic = OracleCritic::new(pool.clone(), corpus.clone());
    let opts = RunOptions { seeds: vec![0], ..Default::default() };
    let base = &run_corpus(&corpus, &pool, &assistant, None, Scenario::Baseline, &opts).unwrap()[0];
    let fixed = &run_corpus(&corpus, &pool, &assistant, Some(&critic), Scenario::ErrorOnlyFeedback, &opts).unwrap()[0];
    assert_eq!(base.metrics.successes, (corpus.len() - n) as u64);
    assert_eq!(fixed.metrics.successes, corpus.len() as u64);
    assert_eq!(fixed.metrics.profile[ErrorCategory::NonInvocationHesitation.index()], n as u64);
    // Error-only feedback carries no reasoning line.
    let fb = fixed.dialogues.iter().flat_map(|d| &d.records).find_map(|r| r.feedback.clone()).unwrap();
    assert!(!fb.contains("Reasoning:"));
}

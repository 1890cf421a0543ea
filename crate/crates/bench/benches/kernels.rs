use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use tooleval_bench::{corpus, reply_pairs};
use tooleval_core::dialogue::{parse_dialogue, render_dialogue};
use tooleval_core::injector::Injector;
use tooleval_core::metrics::{fuzzy_score, rouge_l};
use tooleval_core::ErrorCategory;

fn text_metrics(c: &mut Criterion) {
    let (dialogues, _) = corpus(50);
    let pairs = reply_pairs(&dialogues);
    c.bench_function("fuzzy_score/replies", |b| {
        b.iter(|| pairs.iter().map(|(x, y)| fuzzy_score(black_box(x), black_box(y))).sum::<f64>())
    });
    c.bench_function("rouge_l/replies", |b| {
        b.iter(|| pairs.iter().map(|(x, y)| rouge_l(black_box(x), black_box(y)).f1).sum::<f64>())
    });
}

fn text_format(c: &mut Criterion) {
    let (dialogues, pool) = corpus(50);
    let texts: Vec<String> = dialogues.iter().map(|d| render_dialogue(d, d.len(), &pool).unwrap()).collect();
    c.bench_function("render/50-dialogues", |b| {
        b.iter(|| dialogues.iter().map(|d| render_dialogue(black_box(d), d.len(), &pool).unwrap().len()).sum::<usize>())
    });
    c.bench_function("parse/50-dialogues", |b| {
        b.iter(|| texts.iter().map(|t| parse_dialogue("bench", black_box(t), &pool).unwrap().len()).sum::<usize>())
    });
}

fn injection(c: &mut Criterion) {
    let (dialogues, pool) = corpus(400);
    let injector = Injector::new(pool, &dialogues);
    let mut group = c.benchmark_group("inject");
    group.sample_size(20);
    group.bench_function("deterministic/8x30", |b| b.iter(|| injector.inject_all(black_box(&dialogues), 30, 1).unwrap().len()));
    group.bench_function("viable_sites/all", |b| {
        b.iter(|| {
            dialogues.iter().map(|d| ErrorCategory::ALL.iter().map(|&cat| injector.viable_sites(d, cat).len()).sum::<usize>()).sum::<usize>()
        })
    });
    group.finish();
}

criterion_group!(benches, text_metrics, text_format, injection);
criterion_main!(benches);

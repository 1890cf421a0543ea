//! Shared inputs for the benchmarks.

use tooleval_core::synth::{default_pool, generate};
use tooleval_core::{Dialogue, SchemaPool};

/// A fixed synthetic corpus and its tool pool.
pub fn corpus(n: usize) -> (Vec<Dialogue>, SchemaPool) {
    (generate(n, 7), default_pool())
}

/// Pairs of assistant replies of realistic length, for the text metrics.
pub fn reply_pairs(corpus: &[Dialogue]) -> Vec<(String, String)> {
    let texts: Vec<String> = corpus.iter().flat_map(|d| d.turns.iter().map(|t| t.assistant.text().to_string())).collect();
    texts.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect()
}

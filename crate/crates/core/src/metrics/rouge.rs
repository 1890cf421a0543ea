//! ROUGE-L over word tokens.

use serde::{Deserialize, Serialize};

use super::fuzzy::is_punct;

/// Name recorded in reports so readers know which ROUGE was computed.
pub const ROUGE_VARIANT: &str = "rouge-l-f1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Lowercased whitespace tokens with punctuation removed.
pub fn rouge_tokens(s: &str) -> Vec<String> {
    let stripped: String = s.chars().filter(|c| !is_punct(*c)).collect::<String>().to_lowercase();
    stripped.split_whitespace().map(str::to_string).collect()
}

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Combines an LCS length with the two token counts. Both sides empty is a
/// perfect match; one side empty scores zero.
pub fn rouge_from_counts(lcs: usize, candidate_len: usize, reference_len: usize) -> RougeScore {
    if candidate_len == 0 && reference_len == 0 {
        return RougeScore { precision: 1.0, recall: 1.0, f1: 1.0 };
    }
    if candidate_len == 0 || reference_len == 0 {
        return RougeScore { precision: 0.0, recall: 0.0, f1: 0.0 };
    }
    let precision = lcs as f64 / candidate_len as f64;
    let recall = lcs as f64 / reference_len as f64;
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    RougeScore { precision, recall, f1 }
}

pub fn rouge_l(candidate: &str, reference: &str) -> RougeScore {
    let c = rouge_tokens(candidate);
    let r = rouge_tokens(reference);
    rouge_from_counts(lcs_len(&c, &r), c.len(), r.len())
}

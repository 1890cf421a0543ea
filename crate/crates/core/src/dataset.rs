//! Training and evaluation sets built from injected and clean dialogues.
//!
//! The split unit is always a whole dialogue, so no prefix of an evaluation
//! dialogue can appear in training. Training items are whole injected
//! dialogues (labeled with their error) and one random prefix of each clean
//! dialogue (labeled no-error). Evaluation items are roll-outs: every prefix
//! of every dialogue, with only an injected dialogue's last prefix positive.

use std::collections::BTreeMap;

use num_rational::Ratio;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::category::ErrorCategory;
use crate::critic::{build_critic_prompt, render_verdict, CriticError, Verdict};
use crate::dialogue::{render_dialogue, Dialogue, SchemaPool};
use crate::injector::InjectedDialogue;

/// Prompt budget for exported training records, in tokens.
pub const DEFAULT_PROMPT_CAP: usize = 4971;
/// Completion budget for exported training records, in tokens.
pub const DEFAULT_COMPLETION_CAP: usize = 218;
/// Dialogues sampled per category in a quality-control round.
pub const QC_SAMPLE_SIZE: usize = 10;
/// Largest number of off-definition samples a category may have and pass.
pub const QC_MAX_BAD: usize = 1;

pub type Fraction = Ratio<u64>;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("need at least {needed} clean dialogues, have {available}")]
    InsufficientCleanDialogues { needed: usize, available: usize },
    #[error("stratum `{stratum}` has {size} items but {needed} non-empty parts were requested")]
    EmptyStratum { stratum: String, size: usize, needed: usize },
    #[error("split fractions must be non-negative and sum to 1, got {0}")]
    InvalidFractions(String),
    #[error("{category} has {available} items, {needed} requested")]
    InsufficientItems { category: ErrorCategory, needed: usize, available: usize },
    #[error(transparent)]
    Critic(#[from] CriticError),
}

/// Target of a critic training or evaluation example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "label", rename_all = "snake_case")]
pub enum Label {
    NoError,
    Error { category: ErrorCategory, thought: String },
}

impl Label {
    pub fn category(&self) -> Option<ErrorCategory> {
        match self {
            Label::Error { category, .. } => Some(*category),
            Label::NoError => None,
        }
    }

    /// The text a critic is trained to produce.
    pub fn completion(&self) -> String {
        render_verdict(&self.verdict())
    }

    pub fn verdict(&self) -> Verdict {
        match self {
            Label::NoError => Verdict::NoError,
            Label::Error { category, thought } => Verdict::Detected { category: *category, thought: thought.clone() },
        }
    }

    /// Stratum name used by [`stratified_split`]: the category or `clean`.
    pub fn stratum(&self) -> &'static str {
        self.category().map_or("clean", ErrorCategory::name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDialogue {
    pub dialogue: Dialogue,
    pub label: Label,
    /// Id of the dialogue this item was cut from.
    pub origin: String,
}

impl LabeledDialogue {
    pub fn injected(inj: &InjectedDialogue) -> Self {
        Self {
            dialogue: inj.dialogue.clone(),
            label: Label::Error { category: inj.label.category, thought: inj.label.thought.clone() },
            origin: inj.dialogue.id.clone(),
        }
    }

    pub fn clean(d: &Dialogue) -> Self {
        Self { dialogue: d.clone(), label: Label::NoError, origin: d.id.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RolloutDatapoint {
    pub prefix: Dialogue,
    pub label: Label,
    pub k: usize,
    pub origin: String,
}

/// Generator keyed on `(seed, purpose, key)`.
fn keyed_rng(seed: u64, purpose: &str, key: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(purpose.as_bytes());
    h.update([0]);
    h.update(key.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Balanced training set: every injected dialogue whole, plus one uniformly
/// chosen prefix from each of `|injected|` clean dialogues sampled without
/// replacement. Output is shuffled.
pub fn build_train_split(injected: &[InjectedDialogue], clean: &[Dialogue], seed: u64) -> Result<Vec<LabeledDialogue>, DatasetError> {
    if clean.len() < injected.len() {
        return Err(DatasetError::InsufficientCleanDialogues { needed: injected.len(), available: clean.len() });
    }
    let mut rng = keyed_rng(seed, "train-clean", "");
    let negatives: Vec<LabeledDialogue> = clean
        .choose_multiple(&mut rng, injected.len())
        .map(|d| {
            let mut r = keyed_rng(seed, "train-prefix", &d.id);
            let k = r.random_range(1..=d.len().max(1));
            let dialogue = d.prefix(k).unwrap_or_else(|_| d.clone());
            LabeledDialogue { dialogue, label: Label::NoError, origin: d.id.clone() }
        })
        .collect();
    let mut out: Vec<LabeledDialogue> = injected.iter().map(LabeledDialogue::injected).chain(negatives).collect();
    out.shuffle(&mut keyed_rng(seed, "train-order", ""));
    Ok(out)
}

/// One datapoint per prefix. Only the last prefix of an error-labeled
/// dialogue keeps the error label.
pub fn rollout_expand(d: &LabeledDialogue) -> Vec<RolloutDatapoint> {
    let n = d.dialogue.len();
    (1..=n)
        .map(|k| RolloutDatapoint {
            prefix: d.dialogue.prefix(k).expect("k in range"),
            label: if k == n { d.label.clone() } else { Label::NoError },
            k,
            origin: d.origin.clone(),
        })
        .collect()
}

pub fn rollout_corpus(items: &[LabeledDialogue]) -> Vec<RolloutDatapoint> {
    items.par_iter().flat_map_iter(rollout_expand).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: Fraction,
    pub eval: Fraction,
    pub test: Fraction,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: Fraction, eval: Fraction, test: Fraction, seed: u64) -> Result<Self, DatasetError> {
        let spec = Self { train, eval, test, seed };
        spec.check()?;
        Ok(spec)
    }

    /// 70% / 15% / 15%.
    pub fn standard(seed: u64) -> Self {
        Self { train: Ratio::new(7, 10), eval: Ratio::new(3, 20), test: Ratio::new(3, 20), seed }
    }

    /// 75% / 12.5% / 12.5%: 225 of every 300 injections per category train.
    pub fn train_heavy(seed: u64) -> Self {
        Self { train: Ratio::new(3, 4), eval: Ratio::new(1, 8), test: Ratio::new(1, 8), seed }
    }

    pub fn check(&self) -> Result<(), DatasetError> {
        if self.train + self.eval + self.test != Ratio::from_integer(1) {
            return Err(DatasetError::InvalidFractions(format!("{} + {} + {}", self.train, self.eval, self.test)));
        }
        Ok(())
    }

    fn parts(&self) -> [Fraction; 3] {
        [self.train, self.eval, self.test]
    }
}

/// Part sizes for `n` items: floors first, then the leftover items go to
/// the parts with the largest remainders (earlier parts win ties).
pub fn allocate(n: usize, fractions: [Fraction; 3]) -> [usize; 3] {
    let n = n as u64;
    let exact: Vec<Fraction> = fractions.iter().map(|f| f * n).collect();
    let mut counts: [usize; 3] = [0; 3];
    for (i, e) in exact.iter().enumerate() {
        counts[i] = e.to_integer() as usize;
    }
    let mut left = n as usize - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| exact[b].fract().cmp(&exact[a].fract()).then(a.cmp(&b)));
    for i in order {
        if left == 0 {
            break;
        }
        if exact[i].fract() > Ratio::from_integer(0) {
            counts[i] += 1;
            left -= 1;
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub eval: Vec<T>,
    pub test: Vec<T>,
}

/// Splits `items` per stratum with [`allocate`]. Strata are visited in name
/// order and shuffled by a generator keyed on the stratum, so membership
/// depends only on the seed and the items.
pub fn stratified_split<T, F>(items: Vec<T>, stratum: F, spec: &SplitSpec) -> Result<Split<T>, DatasetError>
where
    F: Fn(&T) -> String,
{
    spec.check()?;
    let mut strata: BTreeMap<String, Vec<T>> = BTreeMap::new();
    for item in items {
        strata.entry(stratum(&item)).or_default().push(item);
    }
    let needed = spec.parts().iter().filter(|f| **f > Ratio::from_integer(0)).count();
    let mut out = Split { train: Vec::new(), eval: Vec::new(), test: Vec::new() };
    for (name, mut group) in strata {
        if group.len() < needed {
            return Err(DatasetError::EmptyStratum { stratum: name, size: group.len(), needed });
        }
        group.shuffle(&mut keyed_rng(spec.seed, "split", &name));
        let [a, b, _] = allocate(group.len(), spec.parts());
        let mut rest = group.split_off(a);
        out.train.extend(group);
        let test = rest.split_off(b);
        out.eval.extend(rest);
        out.test.extend(test);
    }
    Ok(out)
}

/// Everything `build` produces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuiltDataset {
    pub train: Vec<LabeledDialogue>,
    pub eval: Vec<RolloutDatapoint>,
    pub test: Vec<RolloutDatapoint>,
    /// Whole dialogues per part before roll-out and prefix sampling.
    pub dialogues: [usize; 3],
}

/// Balanced dialogue pool (all injections plus as many clean dialogues),
/// stratified split by category, then training prefixes and roll-outs.
pub fn build_dataset(injected: &[InjectedDialogue], clean: &[Dialogue], spec: &SplitSpec) -> Result<BuiltDataset, DatasetError> {
    if clean.len() < injected.len() {
        return Err(DatasetError::InsufficientCleanDialogues { needed: injected.len(), available: clean.len() });
    }
    let mut rng = keyed_rng(spec.seed, "clean-pool", "");
    let clean: Vec<&Dialogue> = clean.choose_multiple(&mut rng, injected.len()).collect();
    #[derive(Clone)]
    enum Item<'a> {
        Injected(&'a InjectedDialogue),
        Clean(&'a Dialogue),
    }
    let items: Vec<Item> = injected.iter().map(Item::Injected).chain(clean.into_iter().map(Item::Clean)).collect();
    let split = stratified_split(
        items,
        |i| match i {
            Item::Injected(d) => d.label.category.name().to_string(),
            Item::Clean(_) => "clean".to_string(),
        },
        spec,
    )?;
    let dialogues = [split.train.len(), split.eval.len(), split.test.len()];
    let (mut tr_inj, mut tr_clean) = (Vec::new(), Vec::new());
    for item in split.train {
        match item {
            Item::Injected(d) => tr_inj.push(d.clone()),
            Item::Clean(d) => tr_clean.push(d.clone()),
        }
    }
    let train = build_train_split(&tr_inj, &tr_clean, spec.seed)?;
    let labeled = |items: Vec<Item>| -> Vec<LabeledDialogue> {
        items
            .into_iter()
            .map(|i| match i {
                Item::Injected(d) => LabeledDialogue::injected(d),
                Item::Clean(d) => LabeledDialogue::clean(d),
            })
            .collect()
    };
    Ok(BuiltDataset {
        train,
        eval: rollout_corpus(&labeled(split.eval)),
        test: rollout_corpus(&labeled(split.test)),
        dialogues,
    })
}

/// Token counting used for export caps.
pub trait TokenCounter: Sync {
    fn count(&self, text: &str) -> usize;

    fn name(&self) -> String;
}

/// Approximates subword tokenizers: each whitespace-separated piece costs
/// one token per started group of four characters.
#[derive(Debug, Clone, Copy, Default)]
pub struct ApproxTokenCounter;

impl TokenCounter for ApproxTokenCounter {
    fn count(&self, text: &str) -> usize {
        text.split_whitespace().map(|w| w.chars().count().div_ceil(4)).sum()
    }

    fn name(&self) -> String {
        "approx-4-chars".to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCaps {
    pub prompt: usize,
    pub completion: usize,
}

impl Default for TokenCaps {
    fn default() -> Self {
        Self { prompt: DEFAULT_PROMPT_CAP, completion: DEFAULT_COMPLETION_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftMeta {
    pub origin: String,
    pub category: Option<ErrorCategory>,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRecord {
    pub prompt: String,
    pub completion: String,
    pub meta: SftMeta,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedRecord {
    pub origin: String,
    pub prompt_tokens: usize,
    pub completion_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftExport {
    pub records: Vec<SftRecord>,
    pub dropped: Vec<DroppedRecord>,
    pub caps: TokenCaps,
    pub tokenizer: String,
}

impl SftExport {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}

/// One prompt/completion record per item, in input order; items over either
/// cap are reported in `dropped` instead.
pub fn export_sft<C: TokenCounter>(items: &[LabeledDialogue], pool: &SchemaPool, caps: TokenCaps, counter: &C) -> Result<SftExport, DatasetError> {
    let rows: Vec<Result<Result<SftRecord, DroppedRecord>, DatasetError>> = items
        .par_iter()
        .map(|item| {
            let prompt = build_critic_prompt(&item.dialogue, pool)?;
            let completion = item.label.completion();
            let (pt, ct) = (counter.count(&prompt), counter.count(&completion));
            if pt > caps.prompt || ct > caps.completion {
                return Ok(Err(DroppedRecord { origin: item.origin.clone(), prompt_tokens: pt, completion_tokens: ct }));
            }
            let meta = SftMeta { origin: item.origin.clone(), category: item.label.category(), k: item.dialogue.len() };
            Ok(Ok(SftRecord { prompt, completion, meta }))
        })
        .collect();
    let mut export = SftExport { records: Vec::new(), dropped: Vec::new(), caps, tokenizer: counter.name() };
    for row in rows {
        match row? {
            Ok(r) => export.records.push(r),
            Err(d) => export.dropped.push(d),
        }
    }
    if !export.dropped.is_empty() {
        log::warn!("dropped {} of {} records over the token caps", export.dropped.len(), items.len());
    }
    Ok(export)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub id: String,
    pub error_turn: usize,
    pub thought: String,
    /// The dialogue as the reviewer sees it.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewBatch {
    pub category: ErrorCategory,
    pub definition: String,
    pub seed: u64,
    pub items: Vec<ReviewItem>,
}

/// A reviewer's judgement of one sampled injection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcAnnotation {
    pub id: String,
    pub follows_definition: bool,
    #[serde(default)]
    pub annotator: String,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QcDecision {
    Pass,
    Regenerate,
}

/// Samples `n` injections of `category` for manual review.
pub fn qc_sample(corpus: &[InjectedDialogue], category: ErrorCategory, n: usize, seed: u64, pool: &SchemaPool) -> Result<ReviewBatch, DatasetError> {
    let of: Vec<&InjectedDialogue> = corpus.iter().filter(|d| d.label.category == category).collect();
    if of.len() < n {
        return Err(DatasetError::InsufficientItems { category, needed: n, available: of.len() });
    }
    let mut rng = keyed_rng(seed, "qc", category.name());
    let items = of
        .choose_multiple(&mut rng, n)
        .map(|d| {
            let text = render_dialogue(&d.dialogue, d.dialogue.len(), pool).map_err(CriticError::from)?;
            Ok(ReviewItem { id: d.dialogue.id.clone(), error_turn: d.provenance.error_turn, thought: d.label.thought.clone(), text })
        })
        .collect::<Result<Vec<_>, DatasetError>>()?;
    Ok(ReviewBatch { category, definition: category.description().to_string(), seed, items })
}

/// Regenerate when more than one reviewed sample misses the definition.
pub fn qc_decide(annotations: &[QcAnnotation]) -> QcDecision {
    if annotations.iter().filter(|a| !a.follows_definition).count() > QC_MAX_BAD {
        QcDecision::Regenerate
    } else {
        QcDecision::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allocation_matches_hand_counts() {
        let s = SplitSpec::standard(0);
        assert_eq!(allocate(300, s.parts()), [210, 45, 45]);
        assert_eq!(allocate(2400, s.parts()), [1680, 360, 360]);
        let h = SplitSpec::train_heavy(0);
        assert_eq!(allocate(300, h.parts()), [225, 38, 37]);
        assert_eq!(allocate(10, s.parts()), [7, 2, 1]);
        let all = SplitSpec::new(Ratio::from_integer(1), Ratio::from_integer(0), Ratio::from_integer(0), 0).unwrap();
        assert_eq!(allocate(5, all.parts()), [5, 0, 0]);
    }

    #[test]
    fn fractions_must_sum_to_one() {
        assert!(SplitSpec::new(Ratio::new(1, 2), Ratio::new(1, 2), Ratio::new(1, 2), 0).is_err());
    }

    #[test]
    fn qc_threshold() {
        let ann = |bad: usize| -> Vec<QcAnnotation> {
            (0..10)
                .map(|i| QcAnnotation { id: i.to_string(), follows_definition: i >= bad, annotator: "a".into(), note: String::new() })
                .collect()
        };
        assert_eq!(qc_decide(&ann(0)), QcDecision::Pass);
        assert_eq!(qc_decide(&ann(1)), QcDecision::Pass);
        assert_eq!(qc_decide(&ann(2)), QcDecision::Regenerate);
        assert_eq!(qc_decide(&[]), QcDecision::Pass);
    }

    #[test]
    fn no_error_completion_is_the_sentence() {
        assert_eq!(Label::NoError.completion(), crate::critic::NO_ERROR_SENTENCE);
    }

    #[test]
    fn approx_tokens() {
        assert_eq!(ApproxTokenCounter.count("a bb ccccc"), 1 + 1 + 2);
        assert_eq!(ApproxTokenCounter.count(""), 0);
    }
}

//! Single-error injection into clean dialogues.
//!
//! Each category has a deterministic transform that corrupts one assistant
//! turn and drops everything after it. The same sites and hints also drive
//! LLM few-shot injection (see [`Injector::inject_llm`]).

mod llm;
mod sites;
mod templates;
mod transform;
mod values;

use std::fmt;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::category::ErrorCategory;
use crate::dialogue::{Dialogue, DialogueError, SchemaPool};
use crate::endpoint::EndpointError;
use crate::metrics::DEFAULT_FUZZY_THRESHOLD;

pub use llm::{
    injection_prompts, parse_injection_response, render_demonstration, Demonstration, LlmSettings, ParsedInjection,
    MAX_DEMONSTRATIONS, MIN_DEMONSTRATIONS,
};
pub use templates::{fill, Slots, Templates, RESPONSE_BANKS, THOUGHT_BANKS};
pub use transform::verify_provenance;
pub(crate) use transform::{quoted_and, quoted_list, slots};
pub use values::{mentioned, numbers_in, tool_noun, ValueBank};

/// Injections per category unless configured otherwise.
pub const DEFAULT_VOLUME: usize = 300;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InjectorError {
    #[error("no viable site for {0} in this dialogue")]
    NoViableSite(ErrorCategory),
    #[error("transform not applicable: {0}")]
    TransformInapplicable(String),
    #[error("only {available} source dialogues admit {category}, {needed} requested")]
    InsufficientSources { category: ErrorCategory, needed: usize, available: usize },
    #[error("{found} demonstrations for {category}; at least {MIN_DEMONSTRATIONS} are needed")]
    InsufficientDemonstrations { category: ErrorCategory, found: usize },
    #[error("model transport error: {0}")]
    Transport(#[from] EndpointError),
    #[error("malformed model JSON ({field}): {detail}")]
    MalformedModelJson { field: String, detail: String },
    #[error("model placed the error at turn {turn}, which is not a viable site")]
    LocationMismatch { turn: usize },
    #[error("template bank: {0}")]
    Templates(String),
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
}

/// Where and how to inject an error.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hint {
    pub category: ErrorCategory,
    pub turn: usize,
    #[serde(default)]
    pub focus_tool: Option<String>,
    #[serde(default)]
    pub focus_arg: Option<String>,
    pub seed: u64,
}

impl fmt::Display for Hint {
    /// The sentence placed in the `<hint>` section of the generation prompt.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.focus_tool, &self.focus_arg) {
            (Some(tool), Some(arg)) => {
                write!(f, "Focus on the tool call {tool}() at Turn {} and on the argument {arg}.", self.turn)
            }
            (Some(tool), None) => write!(f, "Focus on the tool call {tool}() at Turn {}.", self.turn),
            _ => write!(f, "Insert the error at Turn {}.", self.turn),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseRewrite {
    FailureClaim,
    NumericClaim,
    SuccessClaim,
}

/// The change applied to the error turn, with enough detail to check it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    /// The call, result and response of a later turn moved to the error turn.
    MoveCall { from_turn: usize },
    SwapTool { original: String, substitute: String },
    ReplaceArg { arg: String, original: String, replacement: String },
    AddOptional { arg: String, value: String },
    AlterOptional { arg: String, original: String, replacement: String },
    DropOptional { arg: String, original: String },
    RewriteResponse { rewrite: ResponseRewrite },
    /// The tool block was deleted and the response replaced.
    RemoveCall { category: ErrorCategory },
    /// Produced by a model; the notes are its insertion steps.
    Generated { notes: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionMode {
    Deterministic,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionProvenance {
    pub source_id: String,
    pub category: ErrorCategory,
    pub error_turn: usize,
    pub transform: Transform,
    pub mode: InjectionMode,
    pub hint: Hint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorLabel {
    pub category: ErrorCategory,
    pub thought: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectedDialogue {
    pub dialogue: Dialogue,
    pub label: ErrorLabel,
    pub provenance: InjectionProvenance,
}

/// Builds a generator that depends only on its inputs, so results do not
/// change with thread scheduling or iteration order.
pub fn seeded_rng(seed: u64, dialogue_id: &str, category: ErrorCategory, purpose: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(dialogue_id.as_bytes());
    h.update([0]);
    h.update(category.name().as_bytes());
    h.update([0]);
    h.update(purpose.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Injection context: the tool pool, corpus values for distractors, and
/// text banks.
#[derive(Debug, Clone)]
pub struct Injector {
    pool: SchemaPool,
    values: ValueBank,
    templates: Templates,
    threshold: f64,
}

impl Injector {
    pub fn new(pool: SchemaPool, corpus: &[Dialogue]) -> Self {
        Self {
            pool,
            values: ValueBank::from_corpus(corpus),
            templates: Templates::default(),
            threshold: DEFAULT_FUZZY_THRESHOLD,
        }
    }

    pub fn with_templates(mut self, templates: Templates) -> Self {
        self.templates = templates;
        self
    }

    /// Similarity below which a distractor counts as a different value.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn pool(&self) -> &SchemaPool {
        &self.pool
    }

    pub fn templates(&self) -> &Templates {
        &self.templates
    }

    pub fn values(&self) -> &ValueBank {
        &self.values
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Turns at which an error of category `c` can be injected.
    pub fn viable_sites(&self, d: &Dialogue, c: ErrorCategory) -> Vec<usize> {
        sites::viable_sites(self, d, c)
    }

    /// Picks a site uniformly, then (for argument categories) an eligible
    /// argument uniformly.
    pub fn make_hint(&self, d: &Dialogue, c: ErrorCategory, seed: u64) -> Result<Hint, InjectorError> {
        let mut rng = seeded_rng(seed, &d.id, c, "hint");
        let sites = self.viable_sites(d, c);
        let &turn = sites.choose(&mut rng).ok_or(InjectorError::NoViableSite(c))?;
        let args = sites::eligible_args(self, d, c, turn);
        let focus_arg = args.choose(&mut rng).cloned();
        let focus_tool = sites::focus_tool(d, c, turn);
        Ok(Hint { category: c, turn, focus_tool, focus_arg, seed })
    }

    /// Applies the category transform at the hinted turn.
    pub fn inject_deterministic(&self, d: &Dialogue, hint: &Hint) -> Result<InjectedDialogue, InjectorError> {
        transform::inject(self, d, hint)
    }

    /// Injects `volume` errors of category `c`, each into a distinct source
    /// dialogue chosen by the seeded generator.
    pub fn inject_corpus(
        &self,
        sources: &[Dialogue],
        c: ErrorCategory,
        volume: usize,
        seed: u64,
    ) -> Result<Vec<InjectedDialogue>, InjectorError> {
        let mut viable: Vec<&Dialogue> = sources.par_iter().filter(|d| !self.viable_sites(d, c).is_empty()).collect();
        if viable.len() < volume {
            return Err(InjectorError::InsufficientSources { category: c, needed: volume, available: viable.len() });
        }
        let mut rng = seeded_rng(seed, "", c, "corpus");
        rand::seq::SliceRandom::shuffle(viable.as_mut_slice(), &mut rng);
        viable.truncate(volume);
        viable
            .into_par_iter()
            .map(|d| {
                let hint = self.make_hint(d, c, seed)?;
                self.inject_deterministic(d, &hint)
            })
            .collect()
    }

    /// [`Injector::inject_corpus`] for every category, in registry order.
    pub fn inject_all(&self, sources: &[Dialogue], volume: usize, seed: u64) -> Result<Vec<InjectedDialogue>, InjectorError> {
        let mut out = Vec::with_capacity(volume * ErrorCategory::ALL.len());
        for c in ErrorCategory::ALL {
            out.extend(self.inject_corpus(sources, c, volume, seed)?);
        }
        Ok(out)
    }
}

//! Test support shared by the integration targets: scripted model endpoints
//! that answer from ground truth, a transcript recorder for replay, and
//! brute-force metric oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use tooleval_core::critic::{critic_preamble, oracle_critic, render_verdict};
use tooleval_core::dialogue::{parse_dialogue, render_call, teacher_forced_context};
use tooleval_core::endpoint::{replay_record, CompletionRequest, EndpointError, ReplayModel, TextModel};
use tooleval_core::harness::{Assistant, AssistantRequest, ToolExecutor};
use tooleval_core::injector::Templates;
use tooleval_core::metrics::DEFAULT_FUZZY_THRESHOLD;
use tooleval_core::{AssistantAction, Dialogue, SchemaPool};

pub const BUS_TEXT: &str = include_str!("../fixtures/bus_dialogue.txt");
pub const BUS_POOL: &str = include_str!("../fixtures/bus_pool.json");

pub fn bus() -> (Dialogue, SchemaPool) {
    let pool: SchemaPool = serde_json::from_str(BUS_POOL).unwrap();
    (parse_dialogue("bus", BUS_TEXT, &pool).unwrap(), pool)
}

fn reply_for(action: &AssistantAction) -> String {
    match action {
        AssistantAction::Tool(t) => format!("API CALL: {}", render_call(&t.call)),
        AssistantAction::Response { text } => format!("RESPONSE: {text}"),
    }
}

/// Plays an assistant endpoint from ground truth. At the `(dialogue, turn)`
/// positions in `errors` the first attempt plays the given action instead;
/// revisions always go back to the ground truth.
pub struct ScriptedAssistantModel {
    contexts: Vec<(String, String, usize)>,
    corpus: HashMap<String, Dialogue>,
    errors: BTreeMap<(String, usize), AssistantAction>,
}

impl ScriptedAssistantModel {
    pub fn new(corpus: &[Dialogue], pool: &SchemaPool, errors: BTreeMap<(String, usize), AssistantAction>) -> Self {
        let mut contexts = Vec::new();
        for d in corpus {
            for k in 1..=d.len() {
                contexts.push((teacher_forced_context(d, k, pool).unwrap(), d.id.clone(), k));
            }
        }
        // Longest first, so a later turn wins over the prefixes it contains.
        contexts.sort_by_key(|c| std::cmp::Reverse(c.0.len()));
        Self { contexts, corpus: corpus.iter().map(|d| (d.id.clone(), d.clone())).collect(), errors }
    }

    fn locate(&self, prompt: &str) -> Option<(&Dialogue, usize)> {
        self.contexts.iter().find(|c| prompt.contains(&c.0)).map(|c| (&self.corpus[&c.1], c.2))
    }
}

impl TextModel for ScriptedAssistantModel {
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError> {
        let prompt = &request.prompt;
        let (gt, k) = self.locate(prompt).ok_or_else(|| EndpointError::Malformed("unknown conversation".into()))?;
        let truth = &gt.turn(k).unwrap().assistant;
        let revising = prompt.contains("Your previous reply:");
        let action = match self.errors.get(&(gt.id.clone(), k)) {
            Some(e) if !revising => e,
            _ => truth,
        };
        if prompt.contains("Point out any mistake") {
            return Ok(if prompt.contains(&reply_for(truth)) { "No issues found.".into() } else { "The reply is wrong.".into() });
        }
        if prompt.contains("The tool returned the result above.") {
            return Ok(format!("RESPONSE: {}", action.text()));
        }
        Ok(reply_for(action))
    }

    fn identity(&self) -> String {
        "scripted-assistant".into()
    }
}

/// Plays a critic endpoint: reads the dialogue back out of the prompt and
/// answers with the oracle's verdict.
pub struct ScriptedCriticModel {
    preamble: String,
    pool: SchemaPool,
    corpus: Vec<Dialogue>,
    templates: Templates,
}

impl ScriptedCriticModel {
    pub fn new(corpus: &[Dialogue], pool: &SchemaPool) -> Self {
        Self {
            preamble: format!("{}\n\n", critic_preamble(pool).trim_end()),
            pool: pool.clone(),
            corpus: corpus.to_vec(),
            templates: Templates::default(),
        }
    }
}

impl TextModel for ScriptedCriticModel {
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError> {
        let text = request
            .prompt
            .strip_prefix(&self.preamble)
            .ok_or_else(|| EndpointError::Malformed("not a critic prompt".into()))?;
        let mut prefix = parse_dialogue("prefix", text, &self.pool).map_err(|e| EndpointError::Malformed(e.to_string()))?;
        let k = prefix.len();
        let gt = self
            .corpus
            .iter()
            .find(|d| d.len() >= k && d.turns[..k - 1] == prefix.turns[..k - 1] && d.turns[k - 1].user == prefix.turns[k - 1].user)
            .ok_or_else(|| EndpointError::Malformed("unknown conversation".into()))?;
        prefix.id = gt.id.clone();
        let v = oracle_critic(&prefix, gt, &self.pool, &self.templates, DEFAULT_FUZZY_THRESHOLD)
            .map_err(|e| EndpointError::Malformed(e.to_string()))?;
        Ok(render_verdict(&v.verdict))
    }

    fn identity(&self) -> String {
        "scripted-critic".into()
    }
}

/// Passes requests through and keeps a replay transcript of them.
pub struct Recorder<M> {
    inner: M,
    lines: Mutex<Vec<String>>,
}

impl<M: TextModel> Recorder<M> {
    pub fn new(inner: M) -> Self {
        Self { inner, lines: Mutex::new(Vec::new()) }
    }

    pub fn transcript(&self) -> String {
        let mut lines = self.lines.lock().unwrap().clone();
        lines.sort();
        lines.dedup();
        lines.join("\n") + "\n"
    }

    pub fn replay(&self, name: &str) -> ReplayModel {
        ReplayModel::from_jsonl(name, &self.transcript()).unwrap()
    }
}

impl<M: TextModel> TextModel for Recorder<M> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError> {
        let text = self.inner.complete(request)?;
        self.lines.lock().unwrap().push(replay_record(&request.wire_prompt(), &text));
        Ok(text)
    }

    fn identity(&self) -> String {
        self.inner.identity()
    }
}

/// Keeps every history an assistant was shown, keyed by `(dialogue, turn)`.
pub struct HistorySpy<A> {
    pub inner: A,
    pub seen: Mutex<Vec<(String, usize, String)>>,
}

impl<A> HistorySpy<A> {
    pub fn new(inner: A) -> Self {
        Self { inner, seen: Mutex::new(Vec::new()) }
    }
}

impl<A: Assistant> Assistant for HistorySpy<A> {
    fn act(&self, request: &AssistantRequest<'_>, tools: &dyn ToolExecutor) -> Result<AssistantAction, EndpointError> {
        self.seen.lock().unwrap().push((request.dialogue_id.to_string(), request.k, request.history.to_string()));
        self.inner.act(request, tools)
    }

    fn critique(&self, request: &AssistantRequest<'_>, initial: &AssistantAction) -> Result<String, EndpointError> {
        self.seen.lock().unwrap().push((request.dialogue_id.to_string(), request.k, request.history.to_string()));
        self.inner.critique(request, initial)
    }

    fn identity(&self) -> String {
        self.inner.identity()
    }
}

/// Edit distance by plain recursion over suffixes, memoized.
pub fn lev_oracle(a: &[char], b: &[char]) -> usize {
    fn go(a: &[char], b: &[char], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            go(a, b, i + 1, j + 1, memo)
        } else {
            1 + go(a, b, i + 1, j, memo).min(go(a, b, i, j + 1, memo)).min(go(a, b, i + 1, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

/// Longest common subsequence by trying every subsequence of `a`
/// (`a` must be short).
pub fn lcs_oracle<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    assert!(a.len() < 20);
    let is_subseq = |mask: u32| {
        let mut it = b.iter();
        (0..a.len()).filter(|i| mask & (1 << i) != 0).all(|i| it.any(|t| *t == a[i]))
    };
    (0u32..1 << a.len()).filter(|&m| is_subseq(m)).map(u32::count_ones).max().unwrap_or(0) as usize
}

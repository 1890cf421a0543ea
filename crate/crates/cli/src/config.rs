//! The run configuration: one JSON file, paths relative to the file.
//!
//! Secrets never live here; HTTP endpoints name the environment variable
//! that holds their key (`auth_env`).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize};
use tooleval_core::dataset::{Fraction, SplitSpec, TokenCaps};
use tooleval_core::endpoint::{CachedModel, EndpointConfig, HttpModel, ReplayModel, TextModel};
use tooleval_core::harness::MissPolicy;
use tooleval_core::injector::{LlmSettings, DEFAULT_VOLUME, MAX_DEMONSTRATIONS, MIN_DEMONSTRATIONS};
use tooleval_core::metrics::DEFAULT_FUZZY_THRESHOLD;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Tool schemas (JSON array). The built-in synthetic pool when absent.
    #[serde(default)]
    pub pool: Option<PathBuf>,
    /// Source dialogues for injection.
    pub corpus: PathBuf,
    /// Clean dialogues for negatives. Defaults to `corpus`.
    #[serde(default)]
    pub clean_corpus: Option<PathBuf>,
    /// Dialogues the assistant is run on. Defaults to `clean_corpus`, then `corpus`.
    #[serde(default)]
    pub eval_corpus: Option<PathBuf>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Response cache for HTTP endpoints; nothing is cached when absent.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub assistant: Option<AssistantSpec>,
    #[serde(default)]
    pub critic: Option<CriticSpec>,
    #[serde(default)]
    pub injection: InjectionConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub token_caps: TokenCaps,
    #[serde(default = "default_threshold")]
    pub fuzzy_threshold: f64,
    /// Seed for injection, splitting and sampling.
    #[serde(default)]
    pub seed: u64,
    /// Repetition seeds for scenario runs.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub miss_policy: MissPolicy,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_threshold() -> f64 {
    DEFAULT_FUZZY_THRESHOLD
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1]
}

/// The assistant under evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AssistantSpec {
    Http(EndpointConfig),
    Replay { path: PathBuf },
    /// Replays the reference conversation; useful for smoke runs.
    GroundTruth,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CriticSpec {
    Http(EndpointConfig),
    Replay { path: PathBuf },
    /// Structural comparison with the reference conversation.
    Oracle,
}

/// Endpoint for model-backed injection.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    Http(EndpointConfig),
    Replay { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InjectionModeConfig {
    #[default]
    Deterministic,
    Llm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionConfig {
    #[serde(default = "default_volume")]
    pub volume: usize,
    #[serde(default)]
    pub mode: InjectionModeConfig,
    /// Required in `llm` mode.
    #[serde(default)]
    pub model: Option<GeneratorSpec>,
    /// Worked examples per prompt in `llm` mode.
    #[serde(default = "default_demonstrations")]
    pub demonstrations: usize,
}

fn default_volume() -> usize {
    DEFAULT_VOLUME
}

fn default_demonstrations() -> usize {
    MIN_DEMONSTRATIONS
}

impl Default for InjectionConfig {
    fn default() -> Self {
        Self { volume: DEFAULT_VOLUME, mode: InjectionModeConfig::Deterministic, model: None, demonstrations: MIN_DEMONSTRATIONS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitPreset {
    /// 70 / 15 / 15.
    Standard,
    /// 75 / 12.5 / 12.5.
    TrainHeavy,
}

/// Either a preset or all three fractions (`"7/10"`, `"0.7"` or `0.7`).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default)]
    pub preset: Option<SplitPreset>,
    #[serde(default, deserialize_with = "fraction", serialize_with = "fraction_text", skip_serializing_if = "Option::is_none")]
    pub train: Option<Fraction>,
    #[serde(default, deserialize_with = "fraction", serialize_with = "fraction_text", skip_serializing_if = "Option::is_none")]
    pub eval: Option<Fraction>,
    #[serde(default, deserialize_with = "fraction", serialize_with = "fraction_text", skip_serializing_if = "Option::is_none")]
    pub test: Option<Fraction>,
}

/// Exact value of a decimal or `a/b` string.
pub fn parse_fraction(s: &str) -> std::result::Result<Fraction, String> {
    let s = s.trim();
    let bad = || format!("`{s}` is not a fraction (use a/b or a decimal)");
    if let Some((n, d)) = s.split_once('/') {
        let n: u64 = n.trim().parse().map_err(|_| bad())?;
        let d: u64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Fraction::new(n, d));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 18 {
        return Err(bad());
    }
    let scale = 10u64.pow(frac.len() as u32);
    let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let whole = int.checked_mul(scale).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?;
    Ok(Fraction::new(whole, scale))
}

fn fraction<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Option<Fraction>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(serde_json::Number),
        Text(String),
    }
    let text = match Raw::deserialize(de)? {
        Raw::Number(n) => n.to_string(),
        Raw::Text(s) => s,
    };
    parse_fraction(&text).map(Some).map_err(serde::de::Error::custom)
}

fn fraction_text<S: serde::Serializer>(f: &Option<Fraction>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match f {
        Some(f) => s.serialize_str(&format!("{}/{}", f.numer(), f.denom())),
        None => s.serialize_none(),
    }
}

impl SplitConfig {
    pub fn spec(&self, seed: u64) -> std::result::Result<SplitSpec, String> {
        match (self.preset, self.train, self.eval, self.test) {
            (Some(_), Some(_), _, _) | (Some(_), _, Some(_), _) | (Some(_), _, _, Some(_)) => {
                Err("give either `preset` or the fractions, not both".into())
            }
            (Some(SplitPreset::TrainHeavy), ..) => Ok(SplitSpec::train_heavy(seed)),
            (Some(SplitPreset::Standard), ..) | (None, None, None, None) => Ok(SplitSpec::standard(seed)),
            (None, Some(train), Some(eval), Some(test)) => SplitSpec::new(train, eval, test, seed).map_err(|e| e.to_string()),
            _ => Err("`train`, `eval` and `test` must all be given".into()),
        }
    }
}

fn invalid(file: &Path, field: &str, detail: impl std::fmt::Display) -> CliError {
    CliError::validation(format!("{}: field `{field}`: {detail}", file.display()))
}

impl Config {
    /// Reads, resolves relative paths against the file's directory, and
    /// validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, path)
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let mut cfg: Config = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            if field == "." {
                CliError::validation(format!("{}: {inner}", path.display()))
            } else {
                invalid(path, &field, inner)
            }
        })?;
        de.end().map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.resolve(&base);
        cfg.validate(path)?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.pool, &mut self.clean_corpus, &mut self.eval_corpus, &mut self.cache_dir].into_iter().flatten() {
            join(p);
        }
        join(&mut self.corpus);
        join(&mut self.out_dir);
        if let Some(AssistantSpec::Replay { path }) = &mut self.assistant {
            join(path);
        }
        if let Some(CriticSpec::Replay { path }) = &mut self.critic {
            join(path);
        }
        if let Some(GeneratorSpec::Replay { path }) = &mut self.injection.model {
            join(path);
        }
    }

    fn validate(&self, file: &Path) -> Result<()> {
        let must_exist = |field: &str, p: &Path| {
            if p.exists() {
                Ok(())
            } else {
                Err(invalid(file, field, format!("{} does not exist", p.display())))
            }
        };
        must_exist("corpus", &self.corpus)?;
        for (field, p) in [("pool", &self.pool), ("clean_corpus", &self.clean_corpus), ("eval_corpus", &self.eval_corpus)] {
            if let Some(p) = p {
                must_exist(field, p)?;
            }
        }
        if let Some(AssistantSpec::Replay { path }) = &self.assistant {
            must_exist("assistant.path", path)?;
        }
        if let Some(CriticSpec::Replay { path }) = &self.critic {
            must_exist("critic.path", path)?;
        }
        if let Some(GeneratorSpec::Replay { path }) = &self.injection.model {
            must_exist("injection.model.path", path)?;
        }
        self.split.spec(self.seed).map_err(|e| invalid(file, "split", e))?;
        if !(self.fuzzy_threshold > 0.0 && self.fuzzy_threshold <= 1.0) {
            return Err(invalid(file, "fuzzy_threshold", "must be in (0, 1]"));
        }
        if self.seeds.is_empty() {
            return Err(invalid(file, "seeds", "at least one seed is needed"));
        }
        if self.injection.volume == 0 {
            return Err(invalid(file, "injection.volume", "must be positive"));
        }
        if !(MIN_DEMONSTRATIONS..=MAX_DEMONSTRATIONS).contains(&self.injection.demonstrations) {
            return Err(invalid(
                file,
                "injection.demonstrations",
                format!("must be between {MIN_DEMONSTRATIONS} and {MAX_DEMONSTRATIONS}"),
            ));
        }
        if self.injection.mode == InjectionModeConfig::Llm && self.injection.model.is_none() {
            return Err(invalid(file, "injection.model", "required in llm mode"));
        }
        for (field, spec) in [
            ("assistant", self.assistant.as_ref().and_then(AssistantSpec::endpoint)),
            ("critic", self.critic.as_ref().and_then(CriticSpec::endpoint)),
            ("injection.model", self.injection.model.as_ref().and_then(GeneratorSpec::endpoint)),
        ] {
            if let Some(e) = spec {
                if !e.url.starts_with("http://") && !e.url.starts_with("https://") {
                    return Err(invalid(file, &format!("{field}.url"), "must be an http(s) URL"));
                }
                if e.concurrency == 0 {
                    return Err(invalid(file, &format!("{field}.concurrency"), "must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn clean_path(&self) -> &Path {
        self.clean_corpus.as_deref().unwrap_or(&self.corpus)
    }

    pub fn eval_path(&self) -> &Path {
        self.eval_corpus.as_deref().or(self.clean_corpus.as_deref()).unwrap_or(&self.corpus)
    }
}

impl AssistantSpec {
    fn endpoint(&self) -> Option<&EndpointConfig> {
        match self {
            AssistantSpec::Http(e) => Some(e),
            _ => None,
        }
    }
}

impl CriticSpec {
    fn endpoint(&self) -> Option<&EndpointConfig> {
        match self {
            CriticSpec::Http(e) => Some(e),
            _ => None,
        }
    }
}

impl GeneratorSpec {
    fn endpoint(&self) -> Option<&EndpointConfig> {
        match self {
            GeneratorSpec::Http(e) => Some(e),
            _ => None,
        }
    }
}

/// A text model plus the cache in front of it, if any, so hit counts can be
/// reported afterwards.
pub struct Endpoint {
    pub model: Arc<dyn TextModel>,
    pub cache: Option<Arc<CachedModel<HttpModel>>>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
}

impl Endpoint {
    pub fn http(config: &EndpointConfig, cache_dir: Option<&Path>) -> Result<Self> {
        let http = HttpModel::new(config.clone())?;
        let (temperature, max_tokens) = (Some(config.temperature), Some(config.max_tokens));
        Ok(match cache_dir {
            Some(dir) => {
                let cached = Arc::new(CachedModel::new(http, dir));
                Self { model: cached.clone(), cache: Some(cached), temperature, max_tokens }
            }
            None => Self { model: Arc::new(http), cache: None, temperature, max_tokens },
        })
    }

    pub fn replay(path: &Path) -> Result<Self> {
        Ok(Self { model: Arc::new(ReplayModel::load(path)?), cache: None, temperature: None, max_tokens: None })
    }

    pub fn log_cache(&self, role: &str) {
        if let Some(c) = &self.cache {
            log::info!("{role} cache: {} hits, {} misses", c.hits(), c.misses());
        }
    }
}

impl GeneratorSpec {
    pub fn endpoint_with(&self, cache_dir: Option<&Path>) -> Result<Endpoint> {
        match self {
            GeneratorSpec::Http(e) => Endpoint::http(e, cache_dir),
            GeneratorSpec::Replay { path } => Endpoint::replay(path),
        }
    }
}

impl InjectionConfig {
    pub fn llm_settings(&self, endpoint: &Endpoint) -> LlmSettings {
        let mut s = LlmSettings::default();
        if let Some(t) = endpoint.temperature {
            s.temperature = t;
        }
        if let Some(n) = endpoint.max_tokens {
            s.max_tokens = n;
        }
        if let Some(GeneratorSpec::Http(e)) = &self.model {
            s.concurrency = e.concurrency;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_are_exact() {
        assert_eq!(parse_fraction("7/10").unwrap(), Fraction::new(7, 10));
        assert_eq!(parse_fraction("0.15").unwrap(), Fraction::new(3, 20));
        assert_eq!(parse_fraction(".125").unwrap(), Fraction::new(1, 8));
        assert_eq!(parse_fraction("1").unwrap(), Fraction::new(1, 1));
        for bad in ["", ".", "1/0", "-0.5", "a", "0.1.2"] {
            assert!(parse_fraction(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn split_forms() {
        let s: SplitConfig = serde_json::from_str(r#"{"train": 0.8, "eval": "1/10", "test": "0.1"}"#).unwrap();
        assert_eq!(s.spec(3).unwrap(), SplitSpec::new(Fraction::new(4, 5), Fraction::new(1, 10), Fraction::new(1, 10), 3).unwrap());
        let s: SplitConfig = serde_json::from_str(r#"{"preset": "train-heavy"}"#).unwrap();
        assert_eq!(s.spec(0).unwrap(), SplitSpec::train_heavy(0));
        let s: SplitConfig = serde_json::from_str(r#"{"train": 0.8, "eval": 0.1, "test": 0.2}"#).unwrap();
        assert!(s.spec(0).unwrap_err().contains("sum to 1"));
        let s: SplitConfig = serde_json::from_str(r#"{"train": 0.8}"#).unwrap();
        assert!(s.spec(0).is_err());
        assert_eq!(SplitConfig::default().spec(1).unwrap(), SplitSpec::standard(1));
    }
}

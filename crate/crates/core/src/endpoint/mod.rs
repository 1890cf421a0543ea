//! Text-completion endpoints: HTTP, replay transcripts, and a
//! content-addressed response cache.

mod cache;
mod http;
mod replay;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::CachedModel;
pub use http::{EndpointConfig, HttpModel};
pub use replay::{replay_record, ReplayModel};

/// Sampling temperature used unless configured otherwise.
pub const DEFAULT_TEMPERATURE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EndpointError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed endpoint response: {0}")]
    Malformed(String),
    #[error("no recorded response for prompt sha256 {0}")]
    ReplayMiss(String),
    #[error("cache entry {path} is corrupt: {detail}")]
    CacheCorrupt { path: String, detail: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("missing environment variable `{0}`")]
    MissingEnv(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Repetition seed. Never sent over the wire; it only keeps cached
    /// answers of seeded repetitions apart.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<u64>,
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        Self { system: None, prompt: prompt.into(), temperature: DEFAULT_TEMPERATURE, max_tokens: 512, sample: None }
    }

    pub fn with_system(mut self, system: impl Into<String>) -> Self {
        self.system = Some(system.into());
        self
    }

    pub fn with_temperature(mut self, t: f64) -> Self {
        self.temperature = t;
        self
    }

    pub fn with_sample(mut self, seed: u64) -> Self {
        self.sample = Some(seed);
        self
    }

    pub fn with_max_tokens(mut self, n: u32) -> Self {
        self.max_tokens = n;
        self
    }

    /// The single prompt string sent over the wire: the system text, a blank
    /// line, then the prompt.
    pub fn wire_prompt(&self) -> String {
        match &self.system {
            Some(s) => format!("{s}\n\n{}", self.prompt),
            None => self.prompt.clone(),
        }
    }

    pub fn prompt_sha256(&self) -> String {
        sha256_hex(self.wire_prompt().as_bytes())
    }
}

/// Anything that turns a prompt into text. Implementations must be usable
/// from many threads at once.
pub trait TextModel: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError>;

    /// Name plus configuration digest, recorded in run manifests and cache keys.
    fn identity(&self) -> String;
}

impl<T: TextModel + ?Sized> TextModel for &T {
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError> {
        (**self).complete(request)
    }

    fn identity(&self) -> String {
        (**self).identity()
    }
}

impl<T: TextModel + ?Sized> TextModel for Box<T> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError> {
        (**self).complete(request)
    }

    fn identity(&self) -> String {
        (**self).identity()
    }
}

impl<T: TextModel + ?Sized> TextModel for std::sync::Arc<T> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError> {
        (**self).complete(request)
    }

    fn identity(&self) -> String {
        (**self).identity()
    }
}

/// A model backed by a function; handy for scripted tests.
pub struct FnModel<F> {
    name: String,
    f: F,
    calls: AtomicU64,
}

impl<F> FnModel<F>
where
    F: Fn(&CompletionRequest) -> Result<String, EndpointError> + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f, calls: AtomicU64::new(0) }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<F> TextModel for FnModel<F>
where
    F: Fn(&CompletionRequest) -> Result<String, EndpointError> + Send + Sync,
{
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        (self.f)(request)
    }

    fn identity(&self) -> String {
        format!("fn:{}", self.name)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

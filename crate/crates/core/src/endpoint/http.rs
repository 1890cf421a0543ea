use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{sha256_hex, CompletionRequest, EndpointError, TextModel, DEFAULT_TEMPERATURE};

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}
fn default_max_tokens() -> u32 {
    512
}
fn default_concurrency() -> usize {
    4
}
fn default_retries() -> u32 {
    3
}
fn default_backoff_ms() -> u64 {
    500
}
fn default_timeout_secs() -> u64 {
    120
}
fn default_auth_header() -> String {
    "Authorization".to_string()
}
fn default_auth_prefix() -> String {
    "Bearer ".to_string()
}

/// Remote completion endpoint settings. Secrets are never stored here, only
/// the name of the environment variable holding them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub url: String,
    #[serde(default)]
    pub auth_env: Option<String>,
    #[serde(default = "default_auth_header")]
    pub auth_header: String,
    #[serde(default = "default_auth_prefix")]
    pub auth_prefix: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    /// Maximum requests in flight at once.
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>) -> Self {
        serde_json::from_value(serde_json::json!({ "url": url.into() })).expect("defaults fill the rest")
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    prompt: &'a str,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireResponse {
    text: String,
}

struct Gate {
    in_flight: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

impl Gate {
    fn enter(&self) -> GateGuard<'_> {
        let mut n = self.in_flight.lock().expect("gate lock");
        while *n >= self.limit {
            n = self.freed.wait(n).expect("gate lock");
        }
        *n += 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().expect("gate lock") -= 1;
        self.0.freed.notify_one();
    }
}

/// POSTs `{"prompt", "temperature", "max_tokens"}` and reads `{"text"}`.
///
/// The request's own temperature and token budget are sent; the config
/// values are the defaults callers should use when building requests.
pub struct HttpModel {
    config: EndpointConfig,
    agent: ureq::Agent,
    auth: Option<String>,
    gate: Gate,
}

impl HttpModel {
    pub fn new(config: EndpointConfig) -> Result<Self, EndpointError> {
        let auth = match &config.auth_env {
            Some(var) => {
                let secret = std::env::var(var).map_err(|_| EndpointError::MissingEnv(var.clone()))?;
                Some(format!("{}{secret}", config.auth_prefix))
            }
            None => None,
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let gate = Gate { in_flight: Mutex::new(0), freed: Condvar::new(), limit: config.concurrency.max(1) };
        Ok(Self { config, agent, auth, gate })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    fn attempt(&self, body: &WireRequest<'_>) -> Result<String, EndpointError> {
        let mut req = self.agent.post(&self.config.url);
        if let Some(auth) = &self.auth {
            req = req.header(self.config.auth_header.as_str(), auth.as_str());
        }
        let mut resp = req.send_json(body).map_err(|e| EndpointError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(EndpointError::Status { status, body });
        }
        let parsed: WireResponse = resp.body_mut().read_json().map_err(|e| EndpointError::Malformed(e.to_string()))?;
        Ok(parsed.text)
    }
}

fn retryable(e: &EndpointError) -> bool {
    match e {
        EndpointError::Transport(_) => true,
        EndpointError::Status { status, .. } => *status == 429 || *status >= 500,
        _ => false,
    }
}

impl TextModel for HttpModel {
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError> {
        let prompt = request.wire_prompt();
        let body = WireRequest { prompt: &prompt, temperature: request.temperature, max_tokens: request.max_tokens };
        let _slot = self.gate.enter();
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(e) if retryable(&e) && attempt < self.config.retries => {
                    let wait = self.config.backoff_ms.saturating_mul(1 << attempt.min(16));
                    log::warn!("request to {} failed ({e}); retrying in {wait} ms", self.config.url);
                    std::thread::sleep(Duration::from_millis(wait));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn identity(&self) -> String {
        let cfg = serde_json::json!({
            "url": self.config.url,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });
        format!("http:{}#{}", self.config.url, &sha256_hex(cfg.to_string().as_bytes())[..12])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults() {
        let c = EndpointConfig::new("http://localhost:1");
        assert_eq!(c.temperature, 0.1);
        assert_eq!(c.auth_header, "Authorization");
        assert!(serde_json::from_str::<EndpointConfig>(r#"{"url":"x","bogus":1}"#).is_err());
    }

    #[test]
    fn missing_secret_is_reported() {
        let mut c = EndpointConfig::new("http://localhost:1");
        c.auth_env = Some("TOOLEVAL_TEST_SURELY_UNSET_VAR".into());
        assert!(matches!(HttpModel::new(c), Err(EndpointError::MissingEnv(_))));
    }

    #[test]
    fn unreachable_host_is_transport_error() {
        let mut c = EndpointConfig::new("http://127.0.0.1:9/complete");
        c.retries = 0;
        c.timeout_secs = 2;
        let m = HttpModel::new(c).unwrap();
        assert!(matches!(m.complete(&CompletionRequest::new("x")), Err(EndpointError::Transport(_))));
    }
}

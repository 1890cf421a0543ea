use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{sha256_hex, CompletionRequest, EndpointError, TextModel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ReplayLine {
    prompt_sha256: String,
    text: String,
}

/// One JSONL transcript line answering `prompt`.
pub fn replay_record(prompt: &str, text: &str) -> String {
    serde_json::to_string(&ReplayLine { prompt_sha256: sha256_hex(prompt.as_bytes()), text: text.to_string() })
        .expect("strings serialize")
}

/// Answers prompts from a recorded transcript keyed by prompt hash and fails
/// on anything it has not seen.
#[derive(Debug, Clone, Default)]
pub struct ReplayModel {
    name: String,
    answers: HashMap<String, String>,
}

impl ReplayModel {
    pub fn from_jsonl(name: impl Into<String>, text: &str) -> Result<Self, EndpointError> {
        let mut answers = HashMap::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let rec: ReplayLine =
                serde_json::from_str(line).map_err(|e| EndpointError::Malformed(format!("transcript line {}: {e}", i + 1)))?;
            answers.insert(rec.prompt_sha256, rec.text);
        }
        Ok(Self { name: name.into(), answers })
    }

    pub fn load(path: &Path) -> Result<Self, EndpointError> {
        let text = std::fs::read_to_string(path).map_err(|e| EndpointError::Io(format!("{}: {e}", path.display())))?;
        Self::from_jsonl(path.display().to_string(), &text)
    }

    pub fn from_pairs<I, P, T>(name: impl Into<String>, pairs: I) -> Self
    where
        I: IntoIterator<Item = (P, T)>,
        P: AsRef<str>,
        T: Into<String>,
    {
        let answers = pairs.into_iter().map(|(p, t)| (sha256_hex(p.as_ref().as_bytes()), t.into())).collect();
        Self { name: name.into(), answers }
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }
}

impl TextModel for ReplayModel {
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError> {
        let hash = request.prompt_sha256();
        self.answers.get(&hash).cloned().ok_or(EndpointError::ReplayMiss(hash))
    }

    fn identity(&self) -> String {
        format!("replay:{}", self.name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answers_only_recorded_prompt() {
        let line = replay_record("hello", "world");
        let m = ReplayModel::from_jsonl("t", &line).unwrap();
        assert_eq!(m.complete(&CompletionRequest::new("hello")).unwrap(), "world");
        assert_eq!(m.complete(&CompletionRequest::new("hello")).unwrap(), "world");
        assert!(matches!(m.complete(&CompletionRequest::new("other")), Err(EndpointError::ReplayMiss(_))));
    }

    #[test]
    fn system_is_part_of_the_key() {
        let m = ReplayModel::from_pairs("t", [("sys\n\nhi", "ok")]);
        assert_eq!(m.complete(&CompletionRequest::new("hi").with_system("sys")).unwrap(), "ok");
    }
}

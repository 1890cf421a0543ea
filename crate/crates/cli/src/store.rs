//! Reading and writing the pipeline's files, and the manifests that sit
//! next to them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use tooleval_core::dialogue::{read_corpus, validate, validate_pool};
use tooleval_core::endpoint::sha256_hex;
use tooleval_core::synth::default_pool;
use tooleval_core::{Dialogue, SchemaPool};

use crate::config::Config;
use crate::error::{CliError, Result};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::validation(format!("{} line {}: {e}", path.display(), i + 1))))
        .collect()
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read(path)?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de)
        .map_err(|e| CliError::validation(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner())))
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("values serialize") + "\n"
}

/// Writes `text`, creating parent directories. Returns its sha256.
pub fn write(path: &Path, text: &str) -> Result<String> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::validation(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(text.as_bytes()))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

pub fn load_pool(config: Option<&Config>) -> Result<SchemaPool> {
    let Some(path) = config.and_then(|c| c.pool.as_deref()) else { return Ok(default_pool()) };
    let pool: SchemaPool = read_json(path)?;
    if let Some(v) = validate_pool(&pool).first() {
        return Err(CliError::validation(format!("{}: {v}", path.display())));
    }
    Ok(pool)
}

/// Reads a corpus (JSON array or JSONL) and checks every dialogue against
/// the pool.
pub fn load_corpus(path: &Path, pool: &SchemaPool) -> Result<Vec<Dialogue>> {
    let corpus = read_corpus(&read(path)?).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    for d in &corpus {
        if let Some(v) = validate(d, pool).first() {
            return Err(CliError::validation(format!("{}: dialogue `{}`: {v}", path.display(), d.id)));
        }
    }
    Ok(corpus)
}

/// What a command read and wrote, with hashes, so an output directory can
/// be checked against and re-derived from its inputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<Config>,
    pub parameters: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, config: Option<&Config>, parameters: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            config: config.cloned(),
            parameters,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), file_sha256(path)?);
        Ok(())
    }

    /// Writes an output file and records it.
    pub fn output(&mut self, dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
        let path = dir.join(name);
        let sha = write(&path, text)?;
        self.outputs.insert(name.to_string(), sha);
        Ok(path)
    }

    /// `<dir>/<command>.manifest.json`.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.manifest.json", self.command));
        write(&path, &to_json(self))?;
        Ok(path)
    }
}

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::{sha256_hex, CompletionRequest, EndpointError, TextModel};

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    text_sha256: String,
    text: String,
}

/// Wraps a model with an on-disk cache.
///
/// Keys are `sha256(identity + "\n" + request JSON)`; each response lives in
/// `<dir>/<first two hex chars>/<key>.json` together with a checksum of its
/// text. Entries are written to a temporary file and renamed into place, so
/// concurrent writers never expose partial files.
pub struct CachedModel<M> {
    inner: M,
    dir: PathBuf,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<M: TextModel> CachedModel<M> {
    pub fn new(inner: M, dir: impl Into<PathBuf>) -> Self {
        Self { inner, dir: dir.into(), hits: AtomicU64::new(0), misses: AtomicU64::new(0) }
    }

    pub fn key(&self, request: &CompletionRequest) -> String {
        let body = serde_json::to_string(request).expect("requests serialize");
        sha256_hex(format!("{}\n{body}", self.inner.identity()).as_bytes())
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(format!("{key}.json"))
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    /// Requests forwarded to the wrapped model.
    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }

    fn read(&self, key: &str, path: &Path) -> Result<Option<String>, EndpointError> {
        let raw = match std::fs::read_to_string(path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(EndpointError::Io(format!("{}: {e}", path.display()))),
        };
        let corrupt = |detail: &str| EndpointError::CacheCorrupt { path: path.display().to_string(), detail: detail.to_string() };
        let entry: Entry = serde_json::from_str(&raw).map_err(|e| corrupt(&e.to_string()))?;
        if entry.key != key {
            return Err(corrupt("key does not match file name"));
        }
        if sha256_hex(entry.text.as_bytes()) != entry.text_sha256 {
            return Err(corrupt("checksum mismatch"));
        }
        Ok(Some(entry.text))
    }

    fn write(&self, key: &str, path: &Path, text: &str) -> Result<(), EndpointError> {
        let io = |e: std::io::Error| EndpointError::Io(format!("{}: {e}", path.display()));
        let parent = path.parent().expect("cache paths have a parent");
        std::fs::create_dir_all(parent).map_err(io)?;
        let entry = Entry { key: key.to_string(), text_sha256: sha256_hex(text.as_bytes()), text: text.to_string() };
        let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(io)?;
        tmp.write_all(serde_json::to_string(&entry).expect("entries serialize").as_bytes()).map_err(io)?;
        match tmp.persist_noclobber(path) {
            Ok(_) => Ok(()),
            // Another worker stored the same key first.
            Err(e) if e.error.kind() == std::io::ErrorKind::AlreadyExists => Ok(()),
            Err(e) => Err(io(e.error)),
        }
    }
}

impl<M: TextModel> TextModel for CachedModel<M> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, EndpointError> {
        let key = self.key(request);
        let path = self.path_for(&key);
        if let Some(text) = self.read(&key, &path)? {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(text);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let text = self.inner.complete(request)?;
        self.write(&key, &path, &text)?;
        Ok(text)
    }

    fn identity(&self) -> String {
        self.inner.identity()
    }
}

//! Content-addressed response cache.
//!
//! One JSON file per key under the cache directory, keyed on semantic request
//! content (model, messages, temperature) rather than raw bytes, so the same
//! request hits the same file across processes and machines.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};

use super::{ChatProvider, ChatRequest, ChatResponse, ProviderError};

fn hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Stable digest of the request's semantic content.
///
/// Fields are length-prefixed so no two distinct requests can collide by
/// concatenation, and the temperature is hashed by its bit pattern.
pub fn cache_key(request: &ChatRequest) -> String {
    let mut hasher = Sha256::new();
    for field in [
        request.model.as_str(),
        request.system_message.as_str(),
        request.user_message.as_str(),
    ] {
        hasher.update((field.len() as u64).to_le_bytes());
        hasher.update(field.as_bytes());
    }
    hasher.update(request.temperature.to_bits().to_le_bytes());
    hex(&hasher.finalize())
}

/// File-backed cache of chat responses.
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(|e| ProviderError::Cache {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(ResponseCache { dir })
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<ChatResponse> {
        let bytes = std::fs::read(self.path_for(key)).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    /// Writes through a temp file and renames, so readers never observe a
    /// partial entry.
    pub fn put(&self, key: &str, response: &ChatResponse) -> Result<(), ProviderError> {
        let path = self.path_for(key);
        let tmp = self.dir.join(format!("{key}.tmp"));
        let bytes = serde_json::to_vec_pretty(response).map_err(|e| ProviderError::Cache {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        std::fs::write(&tmp, bytes).map_err(|e| ProviderError::Cache {
            path: tmp.display().to_string(),
            message: e.to_string(),
        })?;
        std::fs::rename(&tmp, &path).map_err(|e| ProviderError::Cache {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Wraps any chat provider with the file cache. Identical requests hit the
/// provider exactly once, even when issued concurrently: writes are
/// serialized per key and later callers read the finished entry.
pub struct CachedChatProvider {
    inner: Arc<dyn ChatProvider>,
    cache: ResponseCache,
    key_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    hits: AtomicU64,
}

impl CachedChatProvider {
    pub fn new(inner: Arc<dyn ChatProvider>, cache: ResponseCache) -> Self {
        CachedChatProvider {
            inner,
            cache,
            key_locks: Mutex::new(HashMap::new()),
            hits: AtomicU64::new(0),
        }
    }

    /// Cache hits served so far.
    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::SeqCst)
    }

    fn lock_for(&self, key: &str) -> Arc<Mutex<()>> {
        let mut locks = self.key_locks.lock().expect("key lock table poisoned");
        locks
            .entry(key.to_string())
            .or_insert_with(|| Arc::new(Mutex::new(())))
            .clone()
    }
}

impl ChatProvider for CachedChatProvider {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        request.validate()?;
        let key = cache_key(request);
        // Lock-free fast path: entries are written atomically via rename, so
        // a successful read needs no coordination.
        if let Some(cached) = self.cache.get(&key) {
            self.hits.fetch_add(1, Ordering::SeqCst);
            return Ok(cached);
        }
        let lock = self.lock_for(&key);
        let _guard = lock.lock().expect("per-key lock poisoned");
        // Another caller may have filled the entry while we waited.
        if let Some(cached) = self.cache.get(&key) {
            self.hits.fetch_add(1, Ordering::SeqCst);
            return Ok(cached);
        }
        let response = self.inner.chat(request)?;
        self.cache.put(&key, &response)?;
        Ok(response)
    }

    fn chat_uncached(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        request.validate()?;
        let key = cache_key(request);
        let lock = self.lock_for(&key);
        let _guard = lock.lock().expect("per-key lock poisoned");
        let response = self.inner.chat_uncached(request)?;
        self.cache.put(&key, &response)?;
        Ok(response)
    }

    fn calls(&self) -> u64 {
        self.inner.calls()
    }
}

//! Deterministic providers for offline runs and tests.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use sha2::{Digest, Sha256};

use super::cache::cache_key;
use super::{
    normalize_rows, ChatProvider, ChatRequest, ChatResponse, EmbeddingProvider, EmbeddingResponse,
    ProviderError,
};

/// A scripted chat provider: responses are looked up by the request's cache
/// key. Unknown requests fall back to a configurable default response.
pub struct MockChatProvider {
    script: HashMap<String, String>,
    default_response: Option<String>,
    /// Optional deterministic sleep so tests can randomize completion order.
    latency: Option<(u64, u64)>,
    calls: AtomicU64,
}

impl MockChatProvider {
    pub fn scripted(script: HashMap<String, String>) -> Self {
        MockChatProvider {
            script,
            default_response: None,
            latency: None,
            calls: AtomicU64::new(0),
        }
    }

    /// Provider that answers every request with `text`.
    pub fn constant(text: impl Into<String>) -> Self {
        MockChatProvider::scripted(HashMap::new()).with_default(text)
    }

    pub fn with_default(mut self, text: impl Into<String>) -> Self {
        self.default_response = Some(text.into());
        self
    }

    /// Adds a per-call sleep of up to `max_ms`, keyed by the request hash and
    /// `seed`, so concurrent runs finish in scrambled order reproducibly.
    pub fn with_latency_jitter(mut self, seed: u64, max_ms: u64) -> Self {
        self.latency = Some((seed, max_ms));
        self
    }

    /// Scripts `text` as the response for `request`.
    pub fn insert(&mut self, request: &ChatRequest, text: impl Into<String>) {
        self.script.insert(cache_key(request), text.into());
    }

    /// Absorbs another mock's script (and default, when this one has none).
    pub fn merge(&mut self, other: MockChatProvider) {
        self.script.extend(other.script);
        if self.default_response.is_none() {
            self.default_response = other.default_response;
        }
    }
}

impl ChatProvider for MockChatProvider {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        request.validate()?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        let key = cache_key(request);
        if let Some((seed, max_ms)) = self.latency {
            if max_ms > 0 {
                let mut hasher = Sha256::new();
                hasher.update(seed.to_le_bytes());
                hasher.update(key.as_bytes());
                let digest = hasher.finalize();
                let ms = u64::from_le_bytes(digest[..8].try_into().unwrap()) % (max_ms + 1);
                std::thread::sleep(Duration::from_millis(ms));
            }
        }
        let text = self
            .script
            .get(&key)
            .cloned()
            .or_else(|| self.default_response.clone())
            .ok_or_else(|| {
                ProviderError::Protocol(format!("mock has no scripted response for key {key}"))
            })?;
        Ok(ChatResponse {
            text,
            model: request.model.clone(),
            usage: None,
        })
    }

    fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

enum EmbedMode {
    /// Unit vector derived from a SHA-256 of the text.
    Hash,
    /// Explicit text -> vector table; unknown texts are a protocol error.
    Table(HashMap<String, Vec<f64>>),
}

/// Deterministic embedding provider.
pub struct MockEmbeddingProvider {
    dimension: usize,
    mode: EmbedMode,
}

impl MockEmbeddingProvider {
    /// Hash-based embeddings: same text, same unit vector, any language.
    pub fn hash(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        MockEmbeddingProvider {
            dimension,
            mode: EmbedMode::Hash,
        }
    }

    /// Table-based embeddings for scripted similarity structure.
    pub fn table(dimension: usize, table: HashMap<String, Vec<f64>>) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        MockEmbeddingProvider {
            dimension,
            mode: EmbedMode::Table(table),
        }
    }

    fn hash_vector(&self, text: &str) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dimension);
        let mut counter: u32 = 0;
        while out.len() < self.dimension {
            let mut hasher = Sha256::new();
            hasher.update(text.as_bytes());
            hasher.update(counter.to_le_bytes());
            let digest = hasher.finalize();
            for chunk in digest.chunks_exact(8) {
                if out.len() == self.dimension {
                    break;
                }
                let raw = u64::from_le_bytes(chunk.try_into().unwrap());
                // Center on zero so hash vectors spread over the sphere.
                out.push((raw >> 11) as f64 / (1u64 << 53) as f64 - 0.5);
            }
            counter += 1;
        }
        out
    }
}

impl EmbeddingProvider for MockEmbeddingProvider {
    fn embed(&self, texts: &[String]) -> Result<EmbeddingResponse, ProviderError> {
        if texts.is_empty() {
            return Ok(EmbeddingResponse {
                vectors: vec![],
                dimension: 0,
            });
        }
        if texts.iter().any(|t| t.is_empty()) {
            return Err(ProviderError::InvalidRequest(
                "embedding inputs must be non-empty strings".into(),
            ));
        }
        let mut vectors = Vec::with_capacity(texts.len());
        for text in texts {
            let v = match &self.mode {
                EmbedMode::Hash => self.hash_vector(text),
                EmbedMode::Table(table) => table
                    .get(text)
                    .cloned()
                    .ok_or_else(|| {
                        ProviderError::Protocol(format!("mock table has no vector for {text:?}"))
                    })?,
            };
            if v.len() != self.dimension {
                return Err(ProviderError::Protocol(format!(
                    "vector for {text:?} has dimension {}, expected {}",
                    v.len(),
                    self.dimension
                )));
            }
            vectors.push(v);
        }
        normalize_rows(&mut vectors)?;
        Ok(EmbeddingResponse {
            vectors,
            dimension: self.dimension,
        })
    }
}

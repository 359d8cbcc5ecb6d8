//! Chat-completion and text-embedding providers.
//!
//! The pipeline never talks to a model vendor directly; it goes through the
//! [`ChatProvider`] / [`EmbeddingProvider`] traits. Three families implement
//! them: OpenAI-compatible HTTP clients, deterministic mocks for offline runs
//! and tests, and a content-addressed file cache that wraps any chat provider.

mod cache;
mod http;
mod mock;

pub use cache::{cache_key, CachedChatProvider, ResponseCache};
pub use http::{HttpChatProvider, HttpConfig, HttpEmbeddingProvider};
pub use mock::{MockChatProvider, MockEmbeddingProvider};

use serde::{Deserialize, Serialize};

/// A single zero-shot chat request: one system message, one user message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub system_message: String,
    pub user_message: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl ChatRequest {
    pub fn new(model: impl Into<String>, system: impl Into<String>, user: impl Into<String>) -> Self {
        ChatRequest {
            model: model.into(),
            system_message: system.into(),
            user_message: user.into(),
            temperature: 0.0,
            max_output_tokens: 2048,
        }
    }

    /// Checks the request preconditions providers rely on.
    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.system_message.is_empty() || self.user_message.is_empty() {
            return Err(ProviderError::InvalidRequest(
                "system and user messages must be non-empty".into(),
            ));
        }
        if !(0.0..=2.0).contains(&self.temperature) || !self.temperature.is_finite() {
            return Err(ProviderError::InvalidRequest(format!(
                "temperature {} is outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(ProviderError::InvalidRequest(
                "max_output_tokens must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// Text returned by a chat provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<TokenUsage>,
}

/// One vector per input text, all sharing `dimension`.
///
/// `dimension` is 0 only for an empty input batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResponse {
    pub vectors: Vec<Vec<f64>>,
    pub dimension: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("provider rejected request (HTTP {status}): {message}")]
    Request { status: u16, message: String },
    #[error("rate limited; retries exhausted after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("missing credential: set {0}")]
    MissingCredential(String),
    #[error("request exceeds configured input limit ({chars} chars > {limit}); refusing to truncate")]
    InputTooLarge { chars: usize, limit: usize },
    #[error("cache error at {path}: {message}")]
    Cache { path: String, message: String },
}

/// Something that answers chat requests. Implementations must be safe for
/// concurrent calls and must count every upstream call they perform.
pub trait ChatProvider: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError>;

    /// Like [`ChatProvider::chat`] but bypassing any read cache, so a retry
    /// observes a genuinely fresh completion. Uncached providers answer
    /// identically to `chat`.
    fn chat_uncached(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.chat(request)
    }

    /// Number of upstream calls performed so far (cache hits excluded).
    fn calls(&self) -> u64;
}

/// Something that embeds text batches. One unit-norm vector per input,
/// order preserving.
pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<EmbeddingResponse, ProviderError>;
}

/// Scales vectors to unit L2 norm in place. Zero vectors are a protocol error
/// since direction is undefined for them.
pub(crate) fn normalize_rows(vectors: &mut [Vec<f64>]) -> Result<(), ProviderError> {
    for v in vectors.iter_mut() {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(ProviderError::Protocol(
                "embedding vector has zero or non-finite norm".into(),
            ));
        }
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    Ok(())
}

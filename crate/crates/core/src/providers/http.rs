//! OpenAI-compatible HTTP clients for chat completions and embeddings.
//!
//! Wire shapes follow the widely used chat-completions JSON protocol, so any
//! compatible endpoint works: `POST <base>/chat/completions` and
//! `POST <base>/embeddings`. The credential is read from the
//! `MOTIF_TYPER_API_KEY` environment variable unless set explicitly.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{
    normalize_rows, ChatProvider, ChatRequest, ChatResponse, EmbeddingProvider, EmbeddingResponse,
    ProviderError, TokenUsage,
};

/// Environment variable holding the API credential.
pub const API_KEY_ENV: &str = "MOTIF_TYPER_API_KEY";

/// Connection settings shared by the chat and embedding clients.
#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub base_url: String,
    /// Explicit credential; falls back to `MOTIF_TYPER_API_KEY` when `None`.
    pub api_key: Option<String>,
    /// Attempts per request, counting the first one.
    pub max_attempts: u32,
    /// Base of the exponential backoff between retries.
    pub backoff: Duration,
    pub timeout: Duration,
    /// Reject chat inputs above this many characters instead of truncating.
    pub max_input_chars: Option<usize>,
    /// Truncate each embedding input to this many characters (embedding
    /// models have short limits; chat inputs are never truncated).
    pub truncate_chars: Option<usize>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            base_url: "https://api.openai.com/v1".to_string(),
            api_key: None,
            max_attempts: 4,
            backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(120),
            max_input_chars: None,
            truncate_chars: None,
        }
    }
}

impl HttpConfig {
    fn resolve_key(&self) -> Result<String, ProviderError> {
        if let Some(key) = &self.api_key {
            return Ok(key.clone());
        }
        std::env::var(API_KEY_ENV).map_err(|_| ProviderError::MissingCredential(API_KEY_ENV.into()))
    }

    fn endpoint(&self, path: &str) -> String {
        format!("{}/{}", self.base_url.trim_end_matches('/'), path)
    }
}

enum Outcome {
    Ok(serde_json::Value),
    Retry(String),
    Fatal(ProviderError),
}

/// POSTs `body`, retrying transport errors, 429s, and 5xx with exponential
/// backoff until the attempt budget runs out.
fn post_json(
    agent: &ureq::Agent,
    config: &HttpConfig,
    url: &str,
    body: &serde_json::Value,
) -> Result<serde_json::Value, ProviderError> {
    let key = config.resolve_key()?;
    let mut last_retry_reason = String::new();
    let mut rate_limited = false;

    for attempt in 0..config.max_attempts {
        if attempt > 0 {
            let exp = config.backoff.saturating_mul(1 << (attempt - 1).min(8));
            std::thread::sleep(exp);
        }
        let result = agent
            .post(url)
            .set("Authorization", &format!("Bearer {key}"))
            .set("Content-Type", "application/json")
            .send_json(body.clone());
        let outcome = match result {
            Ok(response) => match response.into_json::<serde_json::Value>() {
                Ok(value) => Outcome::Ok(value),
                Err(e) => Outcome::Fatal(ProviderError::Protocol(format!(
                    "response body is not valid JSON: {e}"
                ))),
            },
            Err(ureq::Error::Status(status, response)) => {
                let text = response.into_string().unwrap_or_default();
                if status == 429 {
                    rate_limited = true;
                    Outcome::Retry(format!("HTTP 429: {text}"))
                } else if (500..600).contains(&status) {
                    Outcome::Retry(format!("HTTP {status}: {text}"))
                } else {
                    Outcome::Fatal(ProviderError::Request {
                        status,
                        message: text,
                    })
                }
            }
            Err(ureq::Error::Transport(t)) => Outcome::Retry(t.to_string()),
        };
        match outcome {
            Outcome::Ok(value) => return Ok(value),
            Outcome::Fatal(err) => return Err(err),
            Outcome::Retry(reason) => last_retry_reason = reason,
        }
    }

    if rate_limited {
        Err(ProviderError::RateLimited {
            attempts: config.max_attempts,
        })
    } else {
        Err(ProviderError::Transport {
            attempts: config.max_attempts,
            message: last_retry_reason,
        })
    }
}

/// Chat-completions client.
pub struct HttpChatProvider {
    config: HttpConfig,
    agent: ureq::Agent,
    calls: AtomicU64,
}

impl HttpChatProvider {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(config.timeout)
            .build();
        HttpChatProvider {
            config,
            agent,
            calls: AtomicU64::new(0),
        }
    }
}

#[derive(Deserialize)]
struct ChatCompletion {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    model: String,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: String,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl ChatProvider for HttpChatProvider {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        request.validate()?;
        if let Some(limit) = self.config.max_input_chars {
            let chars = request.system_message.chars().count() + request.user_message.chars().count();
            if chars > limit {
                return Err(ProviderError::InputTooLarge { chars, limit });
            }
        }
        let body = json!({
            "model": request.model,
            "messages": [
                {"role": "system", "content": request.system_message},
                {"role": "user", "content": request.user_message},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        });
        self.calls.fetch_add(1, Ordering::SeqCst);
        let url = self.config.endpoint("chat/completions");
        let value = post_json(&self.agent, &self.config, &url, &body)?;
        let completion: ChatCompletion = serde_json::from_value(value)
            .map_err(|e| ProviderError::Protocol(format!("unexpected completion shape: {e}")))?;
        let choice = completion
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| ProviderError::Protocol("completion has no choices".into()))?;
        if choice.message.content.is_empty() {
            return Err(ProviderError::Protocol("completion text is empty".into()));
        }
        Ok(ChatResponse {
            text: choice.message.content,
            model: if completion.model.is_empty() {
                request.model.clone()
            } else {
                completion.model
            },
            usage: completion.usage.map(|u| TokenUsage {
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
            }),
        })
    }

    fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

/// Embeddings client. Vectors are L2-normalized client side.
pub struct HttpEmbeddingProvider {
    config: HttpConfig,
    model: String,
    agent: ureq::Agent,
    calls: AtomicU64,
}

#[derive(Deserialize)]
struct EmbeddingList {
    data: Vec<EmbeddingItem>,
}

#[derive(Deserialize)]
struct EmbeddingItem {
    embedding: Vec<f64>,
}

impl HttpEmbeddingProvider {
    pub fn new(config: HttpConfig, model: impl Into<String>) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(config.timeout)
            .build();
        HttpEmbeddingProvider {
            config,
            model: model.into(),
            agent,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

impl EmbeddingProvider for HttpEmbeddingProvider {
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
        let inputs: Vec<String> = match self.config.truncate_chars {
            Some(limit) => texts
                .iter()
                .map(|t| t.chars().take(limit).collect())
                .collect(),
            None => texts.to_vec(),
        };
        let body = json!({ "model": self.model, "input": inputs });
        self.calls.fetch_add(1, Ordering::SeqCst);
        let url = self.config.endpoint("embeddings");
        let value = post_json(&self.agent, &self.config, &url, &body)?;
        let list: EmbeddingList = serde_json::from_value(value)
            .map_err(|e| ProviderError::Protocol(format!("unexpected embedding shape: {e}")))?;
        if list.data.len() != texts.len() {
            return Err(ProviderError::Protocol(format!(
                "expected {} vectors, provider returned {}",
                texts.len(),
                list.data.len()
            )));
        }
        let mut vectors: Vec<Vec<f64>> = list.data.into_iter().map(|d| d.embedding).collect();
        let dimension = vectors[0].len();
        if dimension == 0 || vectors.iter().any(|v| v.len() != dimension) {
            return Err(ProviderError::Protocol(
                "embedding vectors disagree on dimension".into(),
            ));
        }
        normalize_rows(&mut vectors)?;
        Ok(EmbeddingResponse { vectors, dimension })
    }
}

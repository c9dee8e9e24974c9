//! OpenAI-compatible chat-completions client.
//!
//! Speaks `POST {base_url}/chat/completions` with a bearer token taken from
//! `LARK_API_KEY`. Request and response bodies are logged at debug level with
//! the token redacted. When `LARK_CACHE_DIR` is set, responses are cached on
//! disk keyed by the SHA-256 of the request body.

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::provider::{Completion, GenerationRequest, Provider, ProviderError};
use crate::util::{sha256_hex, write_atomic};

pub const API_KEY_ENV: &str = "LARK_API_KEY";
pub const CACHE_DIR_ENV: &str = "LARK_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_timeout_secs() -> u64 {
    120
}

#[derive(Debug, Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_tokens: Option<u64>,
}

#[derive(Debug, Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Debug, Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Debug, Deserialize)]
struct Usage {
    prompt_tokens: u64,
    completion_tokens: u64,
}

pub struct OpenAiCompatible {
    endpoint: EndpointConfig,
    api_key: Option<String>,
    cache_dir: Option<PathBuf>,
    client: reqwest::blocking::Client,
}

impl std::fmt::Debug for OpenAiCompatible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OpenAiCompatible")
            .field("endpoint", &self.endpoint)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("cache_dir", &self.cache_dir)
            .finish()
    }
}

impl OpenAiCompatible {
    /// Builds a client, reading the key and cache directory from the environment.
    pub fn from_env(endpoint: EndpointConfig) -> Result<Self, ProviderError> {
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        let cache_dir = std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from);
        Self::new(endpoint, api_key, cache_dir)
    }

    pub fn new(
        endpoint: EndpointConfig,
        api_key: Option<String>,
        cache_dir: Option<PathBuf>,
    ) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(endpoint.timeout_secs))
            .build()
            .map_err(|e| ProviderError::fatal(format!("http client: {e}")))?;
        Ok(OpenAiCompatible {
            endpoint,
            api_key,
            cache_dir,
            client,
        })
    }

    fn url(&self) -> String {
        format!(
            "{}/chat/completions",
            self.endpoint.base_url.trim_end_matches('/')
        )
    }

    fn cache_path(&self, body: &str) -> Option<PathBuf> {
        self.cache_dir
            .as_ref()
            .map(|d| d.join(format!("{}.json", sha256_hex(body))))
    }

    fn redact(&self, text: &str) -> String {
        match &self.api_key {
            Some(k) => text.replace(k.as_str(), "<redacted>"),
            None => text.to_owned(),
        }
    }

    fn parse(&self, raw: &str) -> Result<Completion, ProviderError> {
        let resp: ChatResponse = serde_json::from_str(raw)
            .map_err(|e| ProviderError::transient(format!("malformed response body: {e}")))?;
        let content = resp
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .unwrap_or_default();
        Ok(Completion {
            text: content.trim().to_owned(),
            prompt_tokens: resp.usage.as_ref().map(|u| u.prompt_tokens),
            completion_tokens: resp.usage.as_ref().map(|u| u.completion_tokens),
        })
    }
}

impl Provider for OpenAiCompatible {
    fn model(&self) -> &str {
        &self.endpoint.model
    }

    fn complete(&self, req: &GenerationRequest<'_>) -> Result<Completion, ProviderError> {
        let body = ChatRequest {
            model: &self.endpoint.model,
            messages: vec![
                ChatMessage {
                    role: "system",
                    content: &req.prompt.system,
                },
                ChatMessage {
                    role: "user",
                    content: &req.prompt.user,
                },
            ],
            temperature: req.temperature,
            max_tokens: req.max_output_tokens,
        };
        let body = serde_json::to_string(&body)
            .map_err(|e| ProviderError::fatal(format!("request encoding: {e}")))?;

        if let Some(path) = self.cache_path(&body) {
            if let Ok(cached) = std::fs::read_to_string(&path) {
                log::debug!("cache hit {}", path.display());
                return self.parse(&cached);
            }
        }

        log::debug!("POST {} {}", self.url(), self.redact(&body));
        let mut http = self
            .client
            .post(self.url())
            .header("content-type", "application/json")
            .body(body.clone());
        if let Some(key) = &self.api_key {
            http = http.bearer_auth(key);
        }
        let resp = http
            .send()
            .map_err(|e| ProviderError::transient(format!("request failed: {e}")))?;
        let status = resp.status();
        let raw = resp
            .text()
            .map_err(|e| ProviderError::transient(format!("reading response: {e}")))?;
        log::debug!("response {status}: {}", self.redact(&raw));

        if !status.is_success() {
            let retryable = status.as_u16() == 429 || status.is_server_error();
            return Err(ProviderError {
                message: format!("HTTP {status}: {}", self.redact(&raw)),
                retryable,
            });
        }
        let completion = self.parse(&raw)?;
        if let Some(path) = self.cache_path(&body) {
            if let Err(e) = write_atomic(&path, &raw) {
                log::warn!("could not cache response: {e}");
            }
        }
        Ok(completion)
    }
}

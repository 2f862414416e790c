use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::http::{api_key_from_env, HttpSettings, JsonClient};
use crate::{jsonl, Error, Result};

pub const LLM_API_KEY_ENV: &str = "LEGALEX_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub logprobs: bool,
    pub max_concurrent_requests: usize,
    pub retry_limit: u32,
    pub timeout_secs: f64,
    pub retry_backoff_ms: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: "http://localhost:8000/v1/chat/completions".into(),
            model: "gpt-4-turbo".into(),
            temperature: 0.0,
            max_output_tokens: 256,
            logprobs: true,
            max_concurrent_requests: 4,
            retry_limit: 2,
            timeout_secs: 60.0,
            retry_backoff_ms: 250,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(Error::Config("llm.temperature must be >= 0".into()));
        }
        if self.max_concurrent_requests == 0 {
            return Err(Error::Config("llm.max_concurrent_requests must be >= 1".into()));
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(Error::Config("llm.timeout_secs must be positive".into()));
        }
        Ok(())
    }
}

/// Model output plus per-token probabilities, when the service returned them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelReply {
    pub text: String,
    pub token_probs: Vec<f64>,
    pub warnings: Vec<String>,
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<ModelReply>;
}

/// Client for an OpenAI-chat-compatible endpoint.
#[derive(Debug, Clone)]
pub struct OpenAiChat {
    client: JsonClient,
    cfg: LlmConfig,
}

impl OpenAiChat {
    /// The API key, if any, comes from `LEGALEX_LLM_API_KEY`.
    pub fn new(cfg: LlmConfig) -> Result<Self> {
        cfg.validate()?;
        let settings = HttpSettings {
            endpoint: cfg.endpoint.clone(),
            api_key: api_key_from_env(LLM_API_KEY_ENV),
            timeout: Duration::from_secs_f64(cfg.timeout_secs),
            retry_limit: cfg.retry_limit,
            retry_backoff: Duration::from_millis(cfg.retry_backoff_ms),
        };
        Ok(OpenAiChat {
            client: JsonClient::new(settings),
            cfg,
        })
    }

    pub fn request_body(&self, prompt: &str) -> Value {
        json!({
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.cfg.temperature,
            "logprobs": self.cfg.logprobs,
            "max_tokens": self.cfg.max_output_tokens,
        })
    }
}

impl ChatBackend for OpenAiChat {
    fn complete(&self, prompt: &str) -> Result<ModelReply> {
        let reply = self.client.post_json(&self.request_body(prompt))?;
        parse_chat_response(&reply, self.cfg.logprobs)
    }
}

/// Read choice text and per-token probabilities (`exp(logprob)`). Accepts the
/// chat shape `logprobs.content[].logprob` and the older
/// `logprobs.token_logprobs[]`.
pub fn parse_chat_response(reply: &Value, logprobs_requested: bool) -> Result<ModelReply> {
    let choice = reply
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| Error::Protocol("chat response has no choices".into()))?;
    let text = choice
        .pointer("/message/content")
        .or_else(|| choice.get("text"))
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Protocol("chat choice has no text content".into()))?
        .to_string();

    let logprobs: Option<Vec<f64>> = match choice.get("logprobs") {
        Some(lp) if !lp.is_null() => {
            if let Some(items) = lp.get("content").and_then(Value::as_array) {
                items.iter().map(|t| t.get("logprob").and_then(Value::as_f64)).collect()
            } else if let Some(items) = lp.get("token_logprobs").and_then(Value::as_array) {
                items.iter().map(Value::as_f64).collect()
            } else {
                None
            }
        }
        _ => None,
    };

    let mut out = ModelReply {
        text,
        ..Default::default()
    };
    match logprobs {
        Some(lps) => out.token_probs = lps.into_iter().map(|lp| lp.exp().clamp(0.0, 1.0)).collect(),
        None if logprobs_requested => out.warnings.push("response carried no token log-probabilities".into()),
        None => {}
    }
    Ok(out)
}

pub fn prompt_sha256(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// One line of a mock fixture file. A fixture without `token_probs` behaves
/// like a server that omits log-probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockFixture {
    pub prompt_sha256: String,
    pub response_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_probs: Option<Vec<f64>>,
}

/// Offline backend answering from a table keyed by prompt hash.
#[derive(Debug, Clone, Default)]
pub struct MockChat {
    fixtures: HashMap<String, MockFixture>,
    fallback: Option<MockFixture>,
}

impl MockChat {
    pub fn new(fixtures: impl IntoIterator<Item = MockFixture>) -> Self {
        MockChat {
            fixtures: fixtures.into_iter().map(|f| (f.prompt_sha256.clone(), f)).collect(),
            fallback: None,
        }
    }

    pub fn from_jsonl(path: &Path) -> Result<Self> {
        Ok(Self::new(jsonl::read_jsonl::<MockFixture>(path)?))
    }

    /// Reply used for prompts missing from the table.
    pub fn with_fallback(mut self, response_text: impl Into<String>, token_probs: Option<Vec<f64>>) -> Self {
        self.fallback = Some(MockFixture {
            prompt_sha256: String::new(),
            response_text: response_text.into(),
            token_probs,
        });
        self
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }
}

impl ChatBackend for MockChat {
    fn complete(&self, prompt: &str) -> Result<ModelReply> {
        let sha = prompt_sha256(prompt);
        let f = self
            .fixtures
            .get(&sha)
            .or(self.fallback.as_ref())
            .ok_or(Error::FixtureMissing(sha))?;
        let mut reply = ModelReply {
            text: f.response_text.clone(),
            ..Default::default()
        };
        match &f.token_probs {
            Some(p) => reply.token_probs = p.clone(),
            None => reply
                .warnings
                .push("response carried no token log-probabilities".into()),
        }
        Ok(reply)
    }
}

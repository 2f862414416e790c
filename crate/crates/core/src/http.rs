//! Blocking JSON-over-HTTP with bounded retries, shared by the embedding and
//! chat clients.

use std::thread;
use std::time::Duration;

use serde_json::Value;

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct HttpSettings {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    /// Extra attempts after the first one.
    pub retry_limit: u32,
    /// Pause before retry `n` is `n * retry_backoff`.
    pub retry_backoff: Duration,
}

#[derive(Debug, Clone)]
pub struct JsonClient {
    agent: ureq::Agent,
    settings: HttpSettings,
}

fn retryable(status: u16) -> bool {
    status == 429 || status >= 500
}

impl JsonClient {
    pub fn new(settings: HttpSettings) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(settings.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        JsonClient { agent, settings }
    }

    pub fn settings(&self) -> &HttpSettings {
        &self.settings
    }

    /// POST `body` and decode the JSON reply. Transport failures, 429 and 5xx
    /// are retried up to `retry_limit` times; other statuses fail at once.
    pub fn post_json(&self, body: &Value) -> Result<Value> {
        let url = &self.settings.endpoint;
        let max_attempts = self.settings.retry_limit + 1;
        let mut last_status = None;
        let mut last_message = String::new();

        for attempt in 1..=max_attempts {
            if attempt > 1 {
                thread::sleep(self.settings.retry_backoff * (attempt - 1));
            }
            let mut req = self.agent.post(url).header("Content-Type", "application/json");
            if let Some(key) = &self.settings.api_key {
                req = req.header("Authorization", format!("Bearer {key}"));
            }
            match req.send_json(body) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if (200..300).contains(&status) {
                        return resp
                            .body_mut()
                            .read_json::<Value>()
                            .map_err(|e| Error::Protocol(format!("{url}: {e}")));
                    }
                    let text = resp.body_mut().read_to_string().unwrap_or_default();
                    last_status = Some(status);
                    last_message = format!("HTTP {status}: {}", text.chars().take(200).collect::<String>());
                    if !retryable(status) {
                        return Err(Error::Transport {
                            url: url.clone(),
                            status: last_status,
                            attempts: attempt,
                            message: last_message,
                        });
                    }
                }
                Err(e) => {
                    last_message = e.to_string();
                }
            }
            tracing::debug!(url = %url, attempt, "request failed: {last_message}");
        }

        Err(Error::Transport {
            url: url.clone(),
            status: last_status,
            attempts: max_attempts,
            message: last_message,
        })
    }
}

/// Read an API key from the environment; unset or blank means no key.
pub fn api_key_from_env(var: &str) -> Option<String> {
    std::env::var(var).ok().filter(|k| !k.trim().is_empty())
}

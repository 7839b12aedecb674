use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for Decoding {
    fn default() -> Self {
        Decoding {
            temperature: 0.0,
            max_tokens: 1024,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    pub model_id: &'a str,
    pub prompt: &'a str,
    pub decoding: Decoding,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport {
        attempts: u32,
        message: String,
        retryable: bool,
    },
    #[error("no cached response for key {key}")]
    CacheMiss { key: String },
    #[error("configuration error: {0}")]
    Config(String),
}

impl ClientError {
    fn retryable(&self) -> bool {
        matches!(self, ClientError::Transport { retryable: true, .. })
    }
}

/// One chat completion with a single user message.
pub trait ModelClient: Send + Sync {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ClientError>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn no_delay(attempts: u32) -> RetryPolicy {
        RetryPolicy {
            attempts,
            base_delay: Duration::ZERO,
        }
    }

    /// Delay before retry number `n` (1-based): base, 2×base, 4×base...
    pub fn delay(&self, n: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(n.saturating_sub(1))
    }
}

/// Calls the client, retrying retryable transport errors with exponential
/// backoff. Returns the response and the number of attempts made.
pub fn complete_with_retry(
    client: &dyn ModelClient,
    request: &CompletionRequest<'_>,
    policy: RetryPolicy,
) -> Result<(String, u32), ClientError> {
    let attempts = policy.attempts.max(1);
    let mut n = 0;
    loop {
        n += 1;
        match client.complete(request) {
            Ok(r) => return Ok((r, n)),
            Err(e) if e.retryable() && n < attempts => std::thread::sleep(policy.delay(n)),
            Err(ClientError::Transport { message, retryable, .. }) => {
                return Err(ClientError::Transport {
                    attempts: n,
                    message,
                    retryable,
                })
            }
            Err(e) => return Err(e),
        }
    }
}

/// OpenAI-compatible `POST {base_url}/chat/completions`.
pub struct HttpClient {
    agent: ureq::Agent,
    base_url: String,
    api_key: Option<String>,
}

impl HttpClient {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>, timeout: Duration) -> HttpClient {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpClient {
            agent,
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key,
        }
    }

    /// Reads the key from the named environment variable; a missing
    /// variable is a configuration error.
    pub fn from_env(base_url: impl Into<String>, api_key_env: &str, timeout: Duration) -> Result<HttpClient, ClientError> {
        let key = std::env::var(api_key_env)
            .map_err(|_| ClientError::Config(format!("environment variable {api_key_env} is not set")))?;
        Ok(HttpClient::new(base_url, Some(key), timeout))
    }
}

fn transport(message: String, retryable: bool) -> ClientError {
    ClientError::Transport {
        attempts: 1,
        message,
        retryable,
    }
}

impl ModelClient for HttpClient {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ClientError> {
        let body = json!({
            "model": request.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.decoding.temperature,
            "max_tokens": request.decoding.max_tokens,
        });
        let mut req = self.agent.post(format!("{}/chat/completions", self.base_url));
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| transport(e.to_string(), true))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| transport(e.to_string(), true))?;
        if !(200..300).contains(&status) {
            let retryable = status == 408 || status == 429 || status >= 500;
            let snippet: String = text.chars().take(200).collect();
            return Err(transport(format!("HTTP {status}: {snippet}"), retryable));
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| transport(format!("invalid response body: {e}"), false))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| transport("response has no choices[0].message.content".into(), false))
    }
}

/// Answers from a fixed prompt → response table; unknown prompts get the
/// fallback, or a non-retryable transport error when there is none.
#[derive(Default)]
pub struct ScriptedClient {
    responses: HashMap<String, String>,
    fallback: Option<String>,
    failures_before_success: Mutex<u32>,
    calls: Mutex<u32>,
}

impl ScriptedClient {
    pub fn new() -> ScriptedClient {
        ScriptedClient::default()
    }

    pub fn always(response: impl Into<String>) -> ScriptedClient {
        ScriptedClient {
            fallback: Some(response.into()),
            ..ScriptedClient::default()
        }
    }

    pub fn with_response(mut self, prompt: impl Into<String>, response: impl Into<String>) -> ScriptedClient {
        self.responses.insert(prompt.into(), response.into());
        self
    }

    /// The first `n` calls fail with a retryable transport error.
    pub fn failing_first(self, n: u32) -> ScriptedClient {
        *self.failures_before_success.lock().unwrap() = n;
        self
    }

    pub fn calls(&self) -> u32 {
        *self.calls.lock().unwrap()
    }
}

impl ModelClient for ScriptedClient {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ClientError> {
        *self.calls.lock().unwrap() += 1;
        {
            let mut left = self.failures_before_success.lock().unwrap();
            if *left > 0 {
                *left -= 1;
                return Err(transport("scripted failure".into(), true));
            }
        }
        self.responses
            .get(request.prompt)
            .or(self.fallback.as_ref())
            .cloned()
            .ok_or_else(|| transport("no scripted response".into(), false))
    }
}

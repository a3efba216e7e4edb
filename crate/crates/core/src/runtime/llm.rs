//! Language-model clients.
//!
//! [`LlmClient`] is the only thing the agent loop calls. The scripted client
//! replays canned completions for offline runs; the HTTP client talks to a
//! chat-completion endpoint. [`SharedClient`] adds retries with exponential
//! backoff and an in-flight request cap on top of either.

use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tracing::{debug, warn};

use crate::runtime::config::LlmConfig;

pub const API_KEY_ENV: &str = "AGENT_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("llm request timed out: {0}")]
    Timeout(String),
    #[error("llm endpoint is rate limiting or overloaded: {message}")]
    RateLimited {
        message: String,
        retry_after: Option<Duration>,
    },
    #[error("malformed llm response: {0}")]
    Malformed(String),
    #[error("missing API key: set {API_KEY_ENV}")]
    MissingApiKey,
}

impl LlmError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, LlmError::Timeout(_) | LlmError::RateLimited { .. })
    }
}

pub trait LlmClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, LlmError>;
}

impl<T: LlmClient + ?Sized> LlmClient for &T {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

impl<T: LlmClient + ?Sized> LlmClient for Box<T> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

impl<T: LlmClient + ?Sized> LlmClient for std::sync::Arc<T> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

/// Hex SHA-256 of a prompt; keys scripted completions.
pub fn prompt_digest(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    /// When set, the entry answers only the prompt with this digest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    pub text: String,
}

/// On-disk completion script.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionScript {
    #[serde(default, rename = "completion")]
    pub completions: Vec<ScriptEntry>,
}

impl CompletionScript {
    pub fn from_texts<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        CompletionScript {
            completions: texts
                .into_iter()
                .map(|t| ScriptEntry { digest: None, text: t.into() })
                .collect(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, String> {
        toml::from_str(s).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("script serializes")
    }
}

/// Replays canned completions. A prompt whose digest has a keyed entry gets
/// that entry (reusable); otherwise the next unkeyed entry is consumed.
#[derive(Debug)]
pub struct ScriptedClient {
    keyed: HashMap<String, String>,
    queue: Mutex<VecDeque<String>>,
    calls: Mutex<Vec<String>>,
}

impl ScriptedClient {
    pub fn new(script: CompletionScript) -> Self {
        let mut keyed = HashMap::new();
        let mut queue = VecDeque::new();
        for entry in script.completions {
            match entry.digest {
                Some(d) => {
                    keyed.insert(d, entry.text);
                }
                None => queue.push_back(entry.text),
            }
        }
        ScriptedClient {
            keyed,
            queue: Mutex::new(queue),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn from_texts<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(CompletionScript::from_texts(texts))
    }

    /// Prompts received so far, in order.
    pub fn prompts(&self) -> Vec<String> {
        self.calls.lock().expect("poisoned").clone()
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().expect("poisoned").len()
    }

    pub fn remaining(&self) -> usize {
        self.queue.lock().expect("poisoned").len()
    }
}

impl LlmClient for ScriptedClient {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        self.calls.lock().expect("poisoned").push(prompt.to_string());
        if let Some(text) = self.keyed.get(&prompt_digest(prompt)) {
            return Ok(text.clone());
        }
        self.queue
            .lock()
            .expect("poisoned")
            .pop_front()
            .ok_or_else(|| LlmError::Malformed("completion script exhausted".into()))
    }
}

/// `min(base * 2^(attempt-1), max)` for 1-based `attempt`.
pub fn backoff_delay(attempt: u32, base_ms: u64, max_ms: u64) -> Duration {
    let exp = attempt.saturating_sub(1).min(20);
    Duration::from_millis(base_ms.saturating_mul(1u64 << exp).min(max_ms))
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(slots: usize) -> Self {
        Gate {
            free: Mutex::new(slots.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut free = self.free.lock().expect("poisoned");
        while *free == 0 {
            free = self.cv.wait(free).expect("poisoned");
        }
        *free -= 1;
        GateGuard { gate: self }
    }
}

struct GateGuard<'a> {
    gate: &'a Gate,
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.gate.free.lock().expect("poisoned") += 1;
        self.gate.cv.notify_one();
    }
}

/// Retrying, concurrency-capped wrapper shared across episodes.
pub struct SharedClient<C> {
    inner: C,
    gate: Gate,
    max_retries: u32,
    base_backoff_ms: u64,
    max_backoff_ms: u64,
}

impl<C: LlmClient> SharedClient<C> {
    pub fn new(inner: C, config: &LlmConfig) -> Self {
        SharedClient {
            inner,
            gate: Gate::new(config.max_in_flight),
            max_retries: config.max_retries,
            base_backoff_ms: config.base_backoff_ms,
            max_backoff_ms: config.max_backoff_ms,
        }
    }

    pub fn inner(&self) -> &C {
        &self.inner
    }
}

impl<C: LlmClient> LlmClient for SharedClient<C> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let mut attempt = 0u32;
        loop {
            let result = {
                let _slot = self.gate.acquire();
                self.inner.complete(prompt)
            };
            match result {
                Ok(text) => return Ok(text),
                Err(err) if err.is_retryable() && attempt < self.max_retries => {
                    attempt += 1;
                    let delay = match &err {
                        LlmError::RateLimited { retry_after: Some(d), .. } => {
                            (*d).min(Duration::from_millis(self.max_backoff_ms))
                        }
                        _ => backoff_delay(attempt, self.base_backoff_ms, self.max_backoff_ms),
                    };
                    debug!(attempt, delay_ms = delay.as_millis() as u64, %err, "retrying llm request");
                    std::thread::sleep(delay);
                }
                Err(err) => {
                    warn!(attempt, %err, "llm request failed");
                    return Err(err);
                }
            }
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: [ChatMessage<'a>; 1],
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    content: Option<String>,
}

/// Chat-completion endpoint client (OpenAI-compatible wire format).
pub struct HttpLlmClient {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    temperature: f64,
    api_key: String,
}

impl HttpLlmClient {
    /// Reads the API key from `AGENT_LLM_API_KEY`.
    pub fn from_env(config: &LlmConfig) -> Result<Self, LlmError> {
        let key = std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or(LlmError::MissingApiKey)?;
        Ok(Self::new(config, key))
    }

    pub fn new(config: &LlmConfig, api_key: String) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .new_agent();
        HttpLlmClient {
            agent,
            endpoint: config.endpoint.clone(),
            model: config.model.clone(),
            temperature: config.temperature,
            api_key,
        }
    }
}

impl LlmClient for HttpLlmClient {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let body = ChatRequest {
            model: &self.model,
            temperature: self.temperature,
            messages: [ChatMessage { role: "user", content: prompt }],
        };
        let mut response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => LlmError::Timeout(e.to_string()),
                ureq::Error::Io(_) | ureq::Error::ConnectionFailed | ureq::Error::HostNotFound => {
                    LlmError::Timeout(e.to_string())
                }
                other => LlmError::Malformed(other.to_string()),
            })?;

        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            let retry_after = response
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            return Err(LlmError::RateLimited {
                message: format!("HTTP {status}"),
                retry_after,
            });
        }
        if !(200..300).contains(&status) {
            let text = response.body_mut().read_to_string().unwrap_or_default();
            return Err(LlmError::Malformed(format!("HTTP {status}: {text}")));
        }
        let parsed: ChatResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| LlmError::Malformed(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LlmError::Malformed("response has no message content".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Flaky {
        failures: AtomicUsize,
        err: LlmError,
    }

    impl LlmClient for Flaky {
        fn complete(&self, _prompt: &str) -> Result<String, LlmError> {
            if self.failures.load(Ordering::SeqCst) > 0 {
                self.failures.fetch_sub(1, Ordering::SeqCst);
                return Err(self.err.clone());
            }
            Ok("ok".into())
        }
    }

    fn fast() -> LlmConfig {
        LlmConfig {
            base_backoff_ms: 0,
            max_backoff_ms: 0,
            max_retries: 2,
            ..LlmConfig::default()
        }
    }

    #[test]
    fn backoff_doubles_and_caps() {
        assert_eq!(backoff_delay(1, 100, 10_000), Duration::from_millis(100));
        assert_eq!(backoff_delay(3, 100, 10_000), Duration::from_millis(400));
        assert_eq!(backoff_delay(30, 100, 10_000), Duration::from_millis(10_000));
    }

    #[test]
    fn retries_transient_errors_up_to_limit() {
        let ok = SharedClient::new(
            Flaky { failures: AtomicUsize::new(2), err: LlmError::Timeout("t".into()) },
            &fast(),
        );
        assert_eq!(ok.complete("p").unwrap(), "ok");

        let exhausted = SharedClient::new(
            Flaky {
                failures: AtomicUsize::new(3),
                err: LlmError::RateLimited { message: "429".into(), retry_after: None },
            },
            &fast(),
        );
        assert!(matches!(exhausted.complete("p"), Err(LlmError::RateLimited { .. })));
    }

    #[test]
    fn malformed_is_not_retried() {
        let client = SharedClient::new(
            Flaky { failures: AtomicUsize::new(1), err: LlmError::Malformed("bad".into()) },
            &fast(),
        );
        assert!(matches!(client.complete("p"), Err(LlmError::Malformed(_))));
        assert_eq!(client.inner().failures.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn scripted_client_prefers_digest_matches() {
        let script = CompletionScript {
            completions: vec![
                ScriptEntry { digest: None, text: "first".into() },
                ScriptEntry { digest: Some(prompt_digest("special")), text: "keyed".into() },
                ScriptEntry { digest: None, text: "second".into() },
            ],
        };
        let client = ScriptedClient::new(script);
        assert_eq!(client.complete("a").unwrap(), "first");
        assert_eq!(client.complete("special").unwrap(), "keyed");
        assert_eq!(client.complete("special").unwrap(), "keyed");
        assert_eq!(client.complete("b").unwrap(), "second");
        assert!(client.complete("c").is_err());
        assert_eq!(client.call_count(), 5);
    }

    #[test]
    fn script_toml_round_trip() {
        let script = CompletionScript {
            completions: vec![ScriptEntry { digest: Some("ab".into()), text: "line 1\nline 2".into() }],
        };
        let back = CompletionScript::from_toml_str(&script.to_toml_string()).unwrap();
        assert_eq!(back, script);
    }
}

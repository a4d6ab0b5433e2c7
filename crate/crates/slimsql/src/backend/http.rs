//! OpenAI-compatible chat-completions client.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value as Json};

use super::{Backend, BackendError, BackendReply, Completion, FinishReason, GenerationRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    /// Server root, e.g. `http://localhost:8000`; `/v1/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    /// Environment variable holding a bearer token, if the server needs one.
    pub api_key_env: Option<String>,
    pub max_in_flight: usize,
    pub request_timeout_secs: u64,
    pub max_retries: u32,
    pub retry_base_ms: u64,
    /// Extra top-level fields merged into every request body (e.g. beam-search knobs).
    pub extra_body: Map<String, Json>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:8000".into(),
            model: String::new(),
            api_key_env: None,
            max_in_flight: 8,
            request_timeout_secs: 120,
            max_retries: 3,
            retry_base_ms: 250,
            extra_body: Map::new(),
        }
    }
}

struct Gate {
    in_flight: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    gate: Gate,
    /// Cleared once the server refuses `n > 1`; later calls fan out instead.
    multi_choice: AtomicBool,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("endpoint", &self.endpoint)
            .field("model", &self.config.model)
            .finish()
    }
}

enum Failure {
    Retryable(String),
    Fatal(BackendError),
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        if config.model.trim().is_empty() {
            return Err(BackendError::InvalidConfig("http backend needs a model name".into()));
        }
        if config.max_in_flight == 0 {
            return Err(BackendError::InvalidConfig("max_in_flight must be >= 1".into()));
        }
        let base = config.base_url.trim_end_matches('/');
        if !(base.starts_with("http://") || base.starts_with("https://")) {
            return Err(BackendError::InvalidConfig(format!(
                "unsupported base url {:?}",
                config.base_url
            )));
        }
        let endpoint = if base.ends_with("/v1") {
            format!("{base}/chat/completions")
        } else {
            format!("{base}/v1/chat/completions")
        };
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var)
                    .map_err(|_| BackendError::InvalidConfig(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.request_timeout_secs.max(1)))
            .build()
            .map_err(|e| BackendError::InvalidConfig(e.to_string()))?;
        Ok(Self {
            gate: Gate {
                in_flight: Mutex::new(0),
                freed: Condvar::new(),
                limit: config.max_in_flight,
            },
            endpoint,
            api_key,
            client,
            multi_choice: AtomicBool::new(true),
            config,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn body(&self, request: &GenerationRequest, n: usize) -> Json {
        let s = &request.sampling;
        let (temperature, top_p) = if s.greedy { (0.0, 1.0) } else { (s.temperature, s.top_p) };
        let mut body = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": temperature,
            "top_p": top_p,
            "n": n,
            "max_tokens": s.max_tokens,
        });
        if let Json::Object(map) = &mut body {
            for (k, v) in &self.config.extra_body {
                map.insert(k.clone(), v.clone());
            }
        }
        body
    }

    fn post_once(&self, body: &Json) -> Result<Vec<Completion>, Failure> {
        let _permit = self.gate.acquire();
        let started = Instant::now();
        let mut builder = self.client.post(&self.endpoint).json(body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| Failure::Retryable(e.to_string()))?;
        let status = response.status();
        let text = response.text().map_err(|e| Failure::Retryable(e.to_string()))?;
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(Failure::Retryable(format!("status {status}: {text}")));
        }
        if !status.is_success() {
            return Err(Failure::Fatal(BackendError::Rejected {
                status: Some(status.as_u16()),
                message: text,
            }));
        }
        let latency = started.elapsed();
        parse_choices(&text, latency).map_err(Failure::Fatal)
    }

    /// One logical call with retries; returns completions and attempts used.
    fn post(&self, body: &Json) -> Result<(Vec<Completion>, u32), BackendError> {
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.post_once(body) {
                Ok(c) => return Ok((c, attempts)),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retryable(msg)) => {
                    if attempts > self.config.max_retries {
                        return Err(BackendError::Unavailable(format!(
                            "{} after {attempts} attempts: {msg}",
                            self.endpoint
                        )));
                    }
                    let delay = self.config.retry_base_ms.saturating_mul(1 << (attempts - 1).min(10));
                    warn!("request to {} failed ({msg}); retrying in {delay} ms", self.endpoint);
                    std::thread::sleep(Duration::from_millis(delay));
                }
            }
        }
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    #[serde(default)]
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    #[serde(default)]
    index: usize,
    message: Option<Message>,
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

fn parse_choices(text: &str, latency: Duration) -> Result<Vec<Completion>, BackendError> {
    let parsed: ChatResponse = serde_json::from_str(text).map_err(|e| BackendError::Rejected {
        status: None,
        message: format!("malformed response: {e}"),
    })?;
    let mut choices = parsed.choices;
    choices.sort_by_key(|c| c.index);
    Ok(choices
        .into_iter()
        .map(|c| {
            let text = c.message.and_then(|m| m.content).unwrap_or_default();
            let finish_reason = match c.finish_reason.as_deref() {
                _ if text.is_empty() => FinishReason::Error,
                Some("length") => FinishReason::Length,
                _ => FinishReason::Stop,
            };
            Completion {
                text,
                finish_reason,
                latency,
            }
        })
        .collect())
}

impl Backend for HttpBackend {
    fn generate(&self, request: &GenerationRequest) -> Result<BackendReply, BackendError> {
        let wanted = request.sampling.expected_completions();
        if wanted > 1 && self.multi_choice.load(Ordering::Relaxed) {
            match self.post(&self.body(request, wanted)) {
                Ok((completions, attempts)) => return Ok(BackendReply { completions, attempts }),
                Err(BackendError::Rejected {
                    status: Some(400 | 422),
                    message,
                }) => {
                    debug!("server refused n={wanted} ({message}); falling back to single-choice calls");
                    self.multi_choice.store(false, Ordering::Relaxed);
                }
                Err(e) => return Err(e),
            }
        }
        let body = self.body(request, 1);
        let mut reply = BackendReply {
            completions: Vec::with_capacity(wanted),
            attempts: 0,
        };
        for _ in 0..wanted {
            let (completions, attempts) = self.post(&body)?;
            reply.attempts += attempts;
            reply.completions.extend(completions.into_iter().take(1));
        }
        Ok(reply)
    }
}

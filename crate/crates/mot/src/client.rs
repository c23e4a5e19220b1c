//! OpenAI-compatible chat-completion client.
//!
//! The HTTP layer sits behind [`Transport`] so that retry behaviour can be
//! exercised against stubs, and so that replay runs can prove they never
//! touch the network.

use std::sync::Arc;
use std::time::{Duration, Instant};

use mot_core::llm::{ChatRequest, ChatResponse, CompletionService, ProviderError, Usage};
use rand::Rng;
use serde::Deserialize;
use serde_json::json;

use crate::config::ProviderConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

/// Failure below the HTTP status level: connect errors, timeouts, broken
/// connections. Always treated as transient.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct TransportError(pub String);

pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        bearer: &str,
        body: &serde_json::Value,
        timeout: Duration,
    ) -> Result<HttpReply, TransportError>;
}

/// Blocking reqwest transport.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn post_json(
        &self,
        url: &str,
        bearer: &str,
        body: &serde_json::Value,
        timeout: Duration,
    ) -> Result<HttpReply, TransportError> {
        let resp = self
            .client
            .post(url)
            .bearer_auth(bearer)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_string())
            .timeout(timeout)
            .send()
            .map_err(|e| TransportError(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpReply { status, body })
    }
}

/// Exponential backoff: 1 s, doubling, capped at 30 s, each delay drawn
/// uniformly from its upper half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backoff {
    pub initial: Duration,
    pub factor: u32,
    pub cap: Duration,
}

impl Default for Backoff {
    fn default() -> Self {
        Self { initial: Duration::from_secs(1), factor: 2, cap: Duration::from_secs(30) }
    }
}

impl Backoff {
    /// Upper bound of the delay before retry number `retry` (1-based).
    pub fn ceiling(&self, retry: u32) -> Duration {
        let mut d = self.initial;
        for _ in 1..retry {
            d = d.saturating_mul(self.factor);
            if d >= self.cap {
                return self.cap;
            }
        }
        d.min(self.cap)
    }

    pub fn delay<R: Rng>(&self, retry: u32, rng: &mut R) -> Duration {
        let hi = self.ceiling(retry);
        let lo = hi / 2;
        if hi == lo {
            return hi;
        }
        lo + Duration::from_nanos(rng.random_range(0..=(hi - lo).as_nanos() as u64))
    }
}

pub type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

#[derive(Clone)]
enum KeySource {
    Env(String),
    Fixed(Option<String>),
}

/// Live client for `{base_url}/chat/completions`.
pub struct LiveClient {
    cfg: ProviderConfig,
    transport: Arc<dyn Transport>,
    key: KeySource,
    backoff: Backoff,
    sleeper: Sleeper,
}

impl LiveClient {
    pub fn new(cfg: ProviderConfig, transport: Arc<dyn Transport>) -> Self {
        let key = KeySource::Env(cfg.api_key_env.clone());
        Self {
            cfg,
            transport,
            key,
            backoff: Backoff::default(),
            sleeper: Arc::new(std::thread::sleep),
        }
    }

    /// Uses `key` instead of reading the configured environment variable.
    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.key = KeySource::Fixed(key);
        self
    }

    pub fn with_backoff(mut self, backoff: Backoff) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn with_sleeper(mut self, sleeper: Sleeper) -> Self {
        self.sleeper = sleeper;
        self
    }

    fn api_key(&self) -> Result<String, ProviderError> {
        let key = match &self.key {
            KeySource::Env(name) => std::env::var(name).ok(),
            KeySource::Fixed(k) => k.clone(),
        };
        match key {
            Some(k) if !k.trim().is_empty() => Ok(k),
            _ => Err(ProviderError::Auth(format!(
                "no API key: environment variable {} is unset or empty",
                self.cfg.api_key_env
            ))),
        }
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'))
    }
}

pub fn request_body(req: &ChatRequest) -> serde_json::Value {
    let messages: Vec<_> = req
        .messages
        .messages()
        .iter()
        .map(|m| json!({"role": m.role.as_str(), "content": m.content}))
        .collect();
    let mut body = json!({"model": req.model, "messages": messages});
    if let Some(n) = req.max_output_tokens {
        body["max_tokens"] = json!(n);
    }
    body
}

#[derive(Deserialize)]
struct WireCompletion {
    choices: Vec<WireChoice>,
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    prompt_tokens: u64,
    completion_tokens: u64,
}

pub fn parse_completion(body: &str) -> Result<(String, Usage), ProviderError> {
    let wire: WireCompletion =
        serde_json::from_str(body).map_err(|e| ProviderError::Protocol(format!("malformed completion: {e}")))?;
    let choice = wire
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| ProviderError::Protocol("completion has no choices".into()))?;
    let usage = wire
        .usage
        .ok_or_else(|| ProviderError::Protocol("completion carries no usage accounting".into()))?;
    Ok((choice.message.content.unwrap_or_default(), Usage::new(usage.prompt_tokens, usage.completion_tokens)))
}

fn is_transient(status: u16) -> bool {
    status == 408 || status == 429 || status >= 500
}

fn snippet(body: &str) -> String {
    let mut s: String = body.chars().take(300).collect();
    if s.len() < body.len() {
        s.push_str("...");
    }
    s
}

impl CompletionService for LiveClient {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let key = self.api_key()?;
        if req.messages.messages().is_empty() {
            return Err(ProviderError::BadRequest { status: 0, message: "request has no messages".into() });
        }
        let body = request_body(req);
        let url = self.url();
        let timeout = Duration::from_millis(self.cfg.request_timeout_ms);
        let started = Instant::now();
        let mut rng = rand::rng();
        let mut attempts = 0;
        loop {
            attempts += 1;
            let failure = match self.transport.post_json(&url, &key, &body, timeout) {
                Ok(reply) if (200..300).contains(&reply.status) => {
                    let (content, usage) = parse_completion(&reply.body)?;
                    if content.is_empty() {
                        log::warn!("provider returned empty content for model {}", req.model);
                    }
                    return Ok(ChatResponse {
                        content,
                        usage,
                        latency_ms: started.elapsed().as_millis() as u64,
                        attempts,
                    });
                }
                Ok(reply) if reply.status == 401 || reply.status == 403 => {
                    return Err(ProviderError::Auth(format!("status {}: {}", reply.status, snippet(&reply.body))));
                }
                Ok(reply) if !is_transient(reply.status) => {
                    return Err(ProviderError::BadRequest { status: reply.status, message: snippet(&reply.body) });
                }
                Ok(reply) => format!("status {}: {}", reply.status, snippet(&reply.body)),
                Err(e) => e.0,
            };
            if attempts > self.cfg.max_retries {
                return Err(ProviderError::Transient { attempts, message: failure });
            }
            let delay = self.backoff.delay(attempts, &mut rng);
            log::info!("attempt {attempts} failed ({failure}); retrying in {delay:?}");
            (self.sleeper)(delay);
        }
    }
}

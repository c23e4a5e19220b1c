//! Chat-completion request/response types and the provider trait.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;
use core::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::prompt::{Message, Prompt};

/// Token usage as reported by the provider.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Usage {
    pub in_tokens: u64,
    pub out_tokens: u64,
}

impl Usage {
    pub fn new(in_tokens: u64, out_tokens: u64) -> Self {
        Self { in_tokens, out_tokens }
    }
}

impl Add for Usage {
    type Output = Usage;

    fn add(self, rhs: Usage) -> Usage {
        Usage {
            in_tokens: self.in_tokens + rhs.in_tokens,
            out_tokens: self.out_tokens + rhs.out_tokens,
        }
    }
}

impl AddAssign for Usage {
    fn add_assign(&mut self, rhs: Usage) {
        *self = *self + rhs;
    }
}

impl core::iter::Sum for Usage {
    fn sum<I: Iterator<Item = Usage>>(iter: I) -> Usage {
        iter.fold(Usage::default(), Add::add)
    }
}

/// A chat-completion request. Temperature is deliberately absent so the
/// provider default applies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Prompt,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_output_tokens: Option<u32>,
}

impl ChatRequest {
    pub fn new(model: impl Into<String>, messages: Prompt) -> Self {
        Self {
            model: model.into(),
            messages,
            max_output_tokens: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    /// May be empty; callers treat that as a provider anomaly.
    pub content: String,
    pub usage: Usage,
    pub latency_ms: u64,
    /// Number of HTTP attempts made, including the successful one.
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("transient provider failure after {attempts} attempts: {message}")]
    Transient { attempts: u32, message: String },
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("bad request (status {status}): {message}")]
    BadRequest { status: u16, message: String },
    #[error("no recorded fixture for request key {key}")]
    FixtureMissing { key: String },
    #[error("unexpected provider response: {0}")]
    Protocol(String),
}

/// Anything that can answer a chat request: a live endpoint, a replay
/// store, or a scripted stand-in in tests.
pub trait CompletionService {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, ProviderError>;
}

impl<T: CompletionService + ?Sized> CompletionService for &T {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        (**self).complete(req)
    }
}

/// Stable key for a request: SHA-256 over the model and the ordered
/// messages, length-prefixed so that boundaries cannot shift. Output-token
/// limits do not participate.
pub fn fixture_key(req: &ChatRequest) -> String {
    let mut hasher = Sha256::new();
    let mut field = |bytes: &[u8]| {
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    };
    field(req.model.as_bytes());
    for Message { role, content } in req.messages.messages() {
        field(role.as_str().as_bytes());
        field(content.as_bytes());
    }
    let digest = hasher.finalize();
    let mut key = String::with_capacity(64);
    for byte in digest.iter() {
        let _ = write!(key, "{byte:02x}");
    }
    key
}

/// On-disk body of a recorded response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub content: String,
    pub in_tokens: u64,
    pub out_tokens: u64,
}

impl From<&ChatResponse> for FixtureEntry {
    fn from(r: &ChatResponse) -> Self {
        Self {
            content: r.content.clone(),
            in_tokens: r.usage.in_tokens,
            out_tokens: r.usage.out_tokens,
        }
    }
}

impl FixtureEntry {
    pub fn into_response(self) -> ChatResponse {
        ChatResponse {
            content: self.content,
            usage: Usage::new(self.in_tokens, self.out_tokens),
            latency_ms: 0,
            attempts: 1,
        }
    }
}

/// Serves a fixed queue of responses in order; for tests and examples.
#[derive(Debug, Default)]
pub struct ScriptedClient {
    responses: core::cell::RefCell<Vec<ChatResponse>>,
    seen: core::cell::RefCell<Vec<ChatRequest>>,
}

impl ScriptedClient {
    pub fn new<I, S>(contents: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut responses: Vec<ChatResponse> = contents
            .into_iter()
            .map(|c| {
                let content = c.into();
                ChatResponse {
                    usage: Usage::new(10, content.len() as u64),
                    content,
                    latency_ms: 0,
                    attempts: 1,
                }
            })
            .collect();
        responses.reverse();
        Self {
            responses: core::cell::RefCell::new(responses),
            seen: core::cell::RefCell::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.seen.borrow().clone()
    }

    pub fn remaining(&self) -> usize {
        self.responses.borrow().len()
    }
}

impl CompletionService for ScriptedClient {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.seen.borrow_mut().push(req.clone());
        self.responses.borrow_mut().pop().ok_or_else(|| ProviderError::FixtureMissing {
            key: fixture_key(req),
        })
    }
}

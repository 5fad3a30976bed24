//! Chat providers, transcripts and cost accounting.
//!
//! Every agent call goes through [`ChatProvider::complete`], which returns a
//! [`ChatExchange`] carrying the response, provider-reported token usage and
//! latency. Providers:
//!
//! * [`LiveProvider`]: OpenAI-compatible HTTP endpoint with retries;
//! * [`ReplayProvider`]: answers from a recorded `.transcript.jsonl`;
//! * [`ScriptedProvider`]: per-role response queues for tests and examples;
//! * [`RecordingProvider`]: wraps another provider and appends a transcript.

mod cost;
mod live;
mod replay;
mod scripted;

pub use cost::{compute_cost, Price, PricingTable};
pub use live::{LiveConfig, LiveProvider};
pub use replay::{prompt_sha256, RecordingProvider, ReplayProvider, ReplayStore, TranscriptRecord};
pub use scripted::ScriptedProvider;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub input_tokens: u64,
    pub output_tokens: u64,
}

impl std::ops::Add for Usage {
    type Output = Usage;
    fn add(self, o: Usage) -> Usage {
        Usage {
            input_tokens: self.input_tokens + o.input_tokens,
            output_tokens: self.output_tokens + o.output_tokens,
        }
    }
}

impl std::iter::Sum for Usage {
    fn sum<I: Iterator<Item = Usage>>(iter: I) -> Usage {
        iter.fold(Usage::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatExchange {
    pub role: String,
    pub prompt: String,
    pub response: String,
    pub usage: Usage,
    pub latency_s: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("provider error: {0}")]
    Provider(String),
    #[error("no recorded exchange for role `{role}` with prompt sha256 {sha256}")]
    ReplayMiss { role: String, sha256: String },
    #[error("script has no response left for role `{0}`")]
    ScriptExhausted(String),
    #[error("transcript {path}: {msg}")]
    Transcript { path: String, msg: String },
    #[error("model `{0}` is not in the pricing table")]
    UnknownModel(String),
}

/// A chat-completion backend. Implementations are safe to call concurrently.
pub trait ChatProvider: Send + Sync {
    fn complete(&self, role: &str, prompt: &str) -> Result<ChatExchange, LlmError>;

    /// An independent session sharing the backend. Replay sessions get their
    /// own cursor.
    fn session(&self) -> Box<dyn ChatProvider>;
}

impl<P: ChatProvider + ?Sized> ChatProvider for Box<P> {
    fn complete(&self, role: &str, prompt: &str) -> Result<ChatExchange, LlmError> {
        (**self).complete(role, prompt)
    }

    fn session(&self) -> Box<dyn ChatProvider> {
        (**self).session()
    }
}

impl<P: ChatProvider + ?Sized> ChatProvider for std::sync::Arc<P> {
    fn complete(&self, role: &str, prompt: &str) -> Result<ChatExchange, LlmError> {
        (**self).complete(role, prompt)
    }

    fn session(&self) -> Box<dyn ChatProvider> {
        (**self).session()
    }
}

/// Rough token estimate for providers without a usage report.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

//! Chat-completions clients: HTTP, scripted (for tests and replays), and a
//! content-addressed response cache that wraps either.

mod cache;
mod http;
mod scripted;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use cache::CachedClient;
pub use http::{parse_completion, HttpClient};
pub use scripted::{ScriptCall, ScriptedClient};

use crate::par::parallel_map;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatEndpoint {
    pub base_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default)]
    pub top_p: Option<f64>,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    /// Default number of candidates per request.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: f64,
}

fn default_max_tokens() -> u32 {
    2048
}
fn default_n() -> usize {
    1
}
fn default_timeout_s() -> f64 {
    60.0
}

impl ChatEndpoint {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        ChatEndpoint {
            base_url: base_url.into(),
            model_name: model_name.into(),
            api_key_env: None,
            temperature: 0.0,
            top_p: None,
            max_tokens: default_max_tokens(),
            n: default_n(),
            timeout_s: default_timeout_s(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let url = reqwest::Url::parse(&self.base_url).map_err(|e| format!("bad base_url {:?}: {e}", self.base_url))?;
        if !matches!(url.scheme(), "http" | "https") {
            return Err(format!("base_url {:?} must be http or https", self.base_url));
        }
        if !(self.temperature >= 0.0) {
            return Err("temperature must be >= 0".into());
        }
        if self.n == 0 {
            return Err("n must be >= 1".into());
        }
        Ok(())
    }

    /// Identity used in cache keys.
    pub fn identity(&self) -> String {
        format!("{}|{}", self.base_url.trim_end_matches('/'), self.model_name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: "system".into(), content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: "user".into(), content: content.into() }
    }
}

/// One completion request. `draw` distinguishes repeated samples of the same
/// messages; it keys the cache and scripted replies but is not sent.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub draw: u64,
    pub seed: Option<u64>,
}

impl ChatRequest {
    pub fn new(messages: Vec<ChatMessage>) -> Self {
        ChatRequest { messages, draw: 0, seed: None }
    }

    pub fn with_draw(mut self, draw: u64) -> Self {
        self.draw = draw;
        self
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    /// Text of the last user message.
    pub fn prompt(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == "user")
            .map(|m| m.content.as_str())
            .unwrap_or("")
    }
}

/// JSON body sent to `{base_url}/chat/completions` (always `n = 1`).
pub fn wire_body(endpoint: &ChatEndpoint, req: &ChatRequest) -> Value {
    let mut body = json!({
        "model": endpoint.model_name,
        "messages": req.messages,
        "temperature": endpoint.temperature,
        "n": 1,
        "max_tokens": endpoint.max_tokens,
    });
    if let Some(p) = endpoint.top_p {
        body["top_p"] = json!(p);
    }
    if let Some(s) = req.seed {
        body["seed"] = json!(s);
    }
    body
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error("endpoint unreachable: {0}")]
    Unreachable(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed completion response: {0}")]
    Malformed(String),
    #[error("scripted client: {0}")]
    Script(String),
    #[error("cache: {0}")]
    Cache(String),
}

pub trait ChatClient: Send + Sync {
    fn endpoint(&self) -> &ChatEndpoint;

    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError>;
}

/// Samples `n` completions as separate requests with draws
/// `first_draw..first_draw + n`, up to `parallelism` at a time. Results come
/// back in draw order; the first error (by draw) wins.
pub fn sample_n(
    client: &dyn ChatClient,
    messages: &[ChatMessage],
    n: usize,
    first_draw: u64,
    seed: Option<u64>,
    parallelism: usize,
) -> Result<Vec<String>, LlmError> {
    let draws: Vec<u64> = (first_draw..first_draw + n as u64).collect();
    parallel_map(&draws, parallelism, |_, &draw| {
        let req = ChatRequest::new(messages.to_vec())
            .with_draw(draw)
            .with_seed(seed.map(|s| s.wrapping_add(draw)));
        client.complete(&req)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_validation() {
        assert!(ChatEndpoint::new("http://localhost:8000/v1", "m").validate().is_ok());
        assert!(ChatEndpoint::new("localhost:8000", "m").validate().is_err());
        assert!(ChatEndpoint::new("ftp://x", "m").validate().is_err());
        let mut e = ChatEndpoint::new("https://x/v1", "m");
        e.temperature = -0.5;
        assert!(e.validate().is_err());
    }

    #[test]
    fn body_shape() {
        let mut e = ChatEndpoint::new("http://h/v1", "qwen");
        e.temperature = 0.7;
        let req = ChatRequest::new(vec![ChatMessage::user("hi")]).with_draw(3);
        assert_eq!(
            serde_json::to_string(&wire_body(&e, &req)).unwrap(),
            r#"{"max_tokens":2048,"messages":[{"content":"hi","role":"user"}],"model":"qwen","n":1,"temperature":0.7}"#
        );
        e.top_p = Some(0.9);
        let body = wire_body(&e, &req.with_seed(Some(5)));
        assert_eq!(body["top_p"], json!(0.9));
        assert_eq!(body["seed"], json!(5));
    }

    #[test]
    fn sample_n_keeps_draw_order() {
        let client = ScriptedClient::from_fn(|call| Ok(format!("draw {}", call.draw)));
        let out = sample_n(&client, &[ChatMessage::user("q")], 5, 10, None, 3).unwrap();
        assert_eq!(out, (10..15).map(|d| format!("draw {d}")).collect::<Vec<_>>());
    }
}

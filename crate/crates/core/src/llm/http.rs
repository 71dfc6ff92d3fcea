use std::thread;
use std::time::Duration;

use log::warn;
use serde_json::Value;

use super::{wire_body, ChatClient, ChatEndpoint, ChatRequest, LlmError};

const ATTEMPTS: u32 = 3;

/// Blocking client for an OpenAI-style `/chat/completions` endpoint.
///
/// Transport failures are retried with exponential backoff; HTTP error
/// statuses are returned as-is.
pub struct HttpClient {
    endpoint: ChatEndpoint,
    http: reqwest::blocking::Client,
    token: Option<String>,
    backoff: Duration,
}

impl HttpClient {
    /// Reads the bearer token from the environment variable named by the
    /// endpoint, if any. A named but unset variable is an error.
    pub fn new(endpoint: ChatEndpoint) -> Result<Self, LlmError> {
        endpoint.validate().map_err(LlmError::Unreachable)?;
        let token = match &endpoint.api_key_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| LlmError::Unreachable(format!("credential variable {var} is not set")))?,
            ),
            None => None,
        };
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(endpoint.timeout_s))
            .build()
            .map_err(|e| LlmError::Unreachable(e.to_string()))?;
        Ok(HttpClient {
            endpoint,
            http,
            token,
            backoff: Duration::from_millis(500),
        })
    }

    /// Initial backoff; doubles after each failed attempt.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.endpoint.base_url.trim_end_matches('/'))
    }

    fn send_once(&self, body: &Value) -> Result<(u16, String), reqwest::Error> {
        let mut rb = self.http.post(self.url()).json(body);
        if let Some(t) = &self.token {
            rb = rb.bearer_auth(t);
        }
        let resp = rb.send()?;
        let status = resp.status().as_u16();
        Ok((status, resp.text()?))
    }
}

impl ChatClient for HttpClient {
    fn endpoint(&self) -> &ChatEndpoint {
        &self.endpoint
    }

    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        let body = wire_body(&self.endpoint, req);
        let mut delay = self.backoff;
        let mut attempt = 1;
        let (status, text) = loop {
            match self.send_once(&body) {
                Ok(r) => break r,
                Err(e) if attempt < ATTEMPTS => {
                    warn!("{} attempt {attempt} failed: {e}; retrying in {delay:?}", self.url());
                    thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                Err(e) => return Err(LlmError::Unreachable(format!("{}: {e}", self.url()))),
            }
        };
        if !(200..300).contains(&status) {
            return Err(LlmError::Status { status, body: text });
        }
        parse_completion(&text)
    }
}

/// Extracts `choices[0].message.content` from a response body.
pub fn parse_completion(text: &str) -> Result<String, LlmError> {
    let v: Value = serde_json::from_str(text).map_err(|e| LlmError::Malformed(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| LlmError::Malformed("missing choices[0].message.content".into()))
}

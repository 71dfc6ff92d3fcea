use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{ChatClient, ChatEndpoint, ChatMessage, ChatRequest, LlmError};

/// What a scripted responder sees for one call.
#[derive(Debug, Clone)]
pub struct ScriptCall {
    pub messages: Vec<ChatMessage>,
    pub draw: u64,
    /// 0-based count of calls made to this client before this one.
    pub call_index: usize,
}

impl ScriptCall {
    pub fn prompt(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == "user")
            .map(|m| m.content.as_str())
            .unwrap_or("")
    }
}

type Responder = dyn Fn(&ScriptCall) -> Result<String, LlmError> + Send + Sync;

/// Deterministic stand-in for a chat endpoint. Records every call.
pub struct ScriptedClient {
    endpoint: ChatEndpoint,
    responder: Box<Responder>,
    calls: AtomicUsize,
    log: Mutex<Vec<ScriptCall>>,
}

impl ScriptedClient {
    pub fn from_fn(f: impl Fn(&ScriptCall) -> Result<String, LlmError> + Send + Sync + 'static) -> Self {
        ScriptedClient {
            endpoint: ChatEndpoint::new("http://scripted.invalid/v1", "scripted"),
            responder: Box::new(f),
            calls: AtomicUsize::new(0),
            log: Mutex::new(Vec::new()),
        }
    }

    /// Always answers `text`.
    pub fn fixed(text: impl Into<String>) -> Self {
        let text = text.into();
        Self::from_fn(move |_| Ok(text.clone()))
    }

    /// Answers the i-th call with `replies[i]`; errors once exhausted.
    pub fn sequence(replies: Vec<String>) -> Self {
        Self::from_fn(move |call| {
            replies
                .get(call.call_index)
                .cloned()
                .ok_or_else(|| LlmError::Script(format!("no reply scripted for call {}", call.call_index)))
        })
    }

    /// Answers draw `d` with `replies[d % len]`, independent of call order.
    pub fn per_draw(replies: Vec<String>) -> Self {
        assert!(!replies.is_empty());
        Self::from_fn(move |call| Ok(replies[(call.draw % replies.len() as u64) as usize].clone()))
    }

    pub fn named(mut self, model_name: &str) -> Self {
        self.endpoint.model_name = model_name.to_string();
        self
    }

    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn calls(&self) -> Vec<ScriptCall> {
        self.log.lock().unwrap().clone()
    }
}

impl ChatClient for ScriptedClient {
    fn endpoint(&self) -> &ChatEndpoint {
        &self.endpoint
    }

    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        // hold the log lock so call_index matches log order
        let mut log = self.log.lock().unwrap();
        let call = ScriptCall {
            messages: req.messages.clone(),
            draw: req.draw,
            call_index: self.calls.fetch_add(1, Ordering::SeqCst),
        };
        log.push(call.clone());
        drop(log);
        (self.responder)(&call)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_then_exhausted() {
        let c = ScriptedClient::sequence(vec!["a".into(), "b".into()]);
        let req = ChatRequest::new(vec![ChatMessage::user("x")]);
        assert_eq!(c.complete(&req).unwrap(), "a");
        assert_eq!(c.complete(&req).unwrap(), "b");
        assert!(matches!(c.complete(&req), Err(LlmError::Script(_))));
        assert_eq!(c.call_count(), 3);
        assert_eq!(c.calls()[1].prompt(), "x");
    }
}

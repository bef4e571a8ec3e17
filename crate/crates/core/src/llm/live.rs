use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{ChatClient, ChatRequest, ChatResponse, FinishReason, LlmError, Part};

#[derive(Debug, Clone, PartialEq)]
pub struct LiveConfig {
    pub base_url: String,
    pub model: String,
    pub api_key: String,
    pub max_in_flight: usize,
    pub timeout: Duration,
}

impl LiveConfig {
    /// Reads `LLM_BASE_URL`, `LLM_MODEL` and `LLM_API_KEY`.
    pub fn from_env() -> Result<Self, LlmError> {
        let var = |k: &str| std::env::var(k).map_err(|_| LlmError::InvalidRequest(format!("{k} is not set")));
        Ok(Self {
            base_url: var("LLM_BASE_URL")?,
            model: var("LLM_MODEL")?,
            api_key: var("LLM_API_KEY").unwrap_or_default(),
            max_in_flight: 4,
            timeout: Duration::from_secs(120),
        })
    }
}

/// OpenAI-compatible chat-completions client.
pub struct LiveClient {
    config: LiveConfig,
    agent: ureq::Agent,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

impl LiveClient {
    pub fn new(config: LiveConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            config,
            agent,
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn payload(&self, req: &ChatRequest) -> Value {
        let content: Vec<Value> = req
            .parts
            .iter()
            .map(|p| match p {
                Part::Text { text } => json!({ "type": "text", "text": text }),
                Part::Image { .. } => json!({ "type": "image_url", "image_url": { "url": p.data_url() } }),
            })
            .collect();
        json!({
            "model": self.config.model,
            "messages": [
                { "role": "system", "content": req.system },
                { "role": "user", "content": content },
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        })
    }

    fn send(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let start = Instant::now();
        let mut resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.config.api_key))
            .send_json(self.payload(req))
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let body: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| LlmError::Transport(format!("reading reply: {e}")))?;
        if status == 429 || status >= 500 {
            return Err(LlmError::Transport(format!("HTTP {status}: {body}")));
        }
        if status >= 400 {
            return Err(LlmError::Malformed(format!("HTTP {status}: {body}")));
        }
        parse_reply(&body, start.elapsed().as_millis() as u64)
    }
}

pub(crate) fn parse_reply(body: &Value, latency_ms: u64) -> Result<ChatResponse, LlmError> {
    let choice = body
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| LlmError::Malformed("reply has no choices".into()))?;
    let text = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    let finish_reason = match choice.get("finish_reason").and_then(Value::as_str) {
        Some("stop") | None => FinishReason::Stop,
        Some("length") => FinishReason::Length,
        Some(_) => FinishReason::Error,
    };
    Ok(ChatResponse {
        text,
        finish_reason,
        latency_ms,
    })
}

impl ChatClient for LiveClient {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        {
            let mut n = self.in_flight.lock().unwrap();
            while *n >= self.config.max_in_flight.max(1) {
                n = self.freed.wait(n).unwrap();
            }
            *n += 1;
        }
        let out = self.send(req);
        *self.in_flight.lock().unwrap() -= 1;
        self.freed.notify_one();
        out
    }
}

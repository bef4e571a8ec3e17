//! Gateway to chat models, judges and web search with live, scripted and
//! replay backends.

mod live;
mod replay;
mod scripted;
mod search;

use std::sync::Arc;
use std::time::Instant;

use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use live::{LiveClient, LiveConfig};
pub use replay::{Recorder, ReplayClient, TranscriptRecord};
pub use scripted::{ScriptRule, ScriptedClient};
pub use search::{search_or_empty, FixtureSearch, LiveSearch, NoSearch, SearchClient, SearchResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("no transcript entry for request digest {digest}")]
    ReplayMiss { digest: String },
    #[error("no scripted rule matches the {tag} request")]
    NoMatch { tag: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("malformed backend reply: {0}")]
    Malformed(String),
    #[error("{0}")]
    Io(String),
}

impl LlmError {
    /// Whether a caller may reasonably try again.
    pub fn is_retryable(&self) -> bool {
        matches!(self, LlmError::Transport(_))
    }
}

mod b64 {
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&base64::engine::general_purpose::STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        base64::engine::general_purpose::STANDARD.decode(s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Part {
    Text { text: String },
    Image {
        media_type: String,
        #[serde(with = "b64")]
        data: Vec<u8>,
    },
}

impl Part {
    pub fn text(t: impl Into<String>) -> Self {
        Part::Text { text: t.into() }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Part::Text { text } => Some(text),
            Part::Image { .. } => None,
        }
    }

    pub fn data_url(&self) -> Option<String> {
        match self {
            Part::Image { media_type, data } => Some(format!(
                "data:{media_type};base64,{}",
                base64::engine::general_purpose::STANDARD.encode(data)
            )),
            Part::Text { .. } => None,
        }
    }
}

pub const DEFAULT_TEMPERATURE: f32 = 0.0;
pub const DEFAULT_MAX_TOKENS: u32 = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system: String,
    pub parts: Vec<Part>,
    pub temperature: f32,
    pub max_tokens: u32,
    /// Pipeline stage, e.g. `generate` or `judge.relevance`.
    pub tag: String,
}

impl ChatRequest {
    pub fn new(tag: &str, system: impl Into<String>, user: impl Into<String>) -> Self {
        Self {
            system: system.into(),
            parts: vec![Part::text(user)],
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
            tag: tag.to_string(),
        }
    }

    pub fn with_part(mut self, p: Part) -> Self {
        self.parts.push(p);
        self
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.parts.is_empty() {
            return Err(LlmError::InvalidRequest("at least one user part is required".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        Ok(())
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.parts.iter().filter_map(Part::as_text)
    }

    pub fn last_text(&self) -> &str {
        self.parts.iter().rev().find_map(Part::as_text).unwrap_or("")
    }

    /// Stable hash of system text, user texts and tag; images are left out.
    pub fn digest(&self) -> String {
        let mut fields = vec![self.system.as_str()];
        fields.extend(self.texts());
        fields.push(&self.tag);
        let encoded = serde_json::to_string(&fields).expect("strings serialize");
        hex::encode(Sha256::digest(encoded.as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub finish_reason: FinishReason,
    pub latency_ms: u64,
}

impl ChatResponse {
    pub fn stop(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            finish_reason: FinishReason::Stop,
            latency_ms: 0,
        }
    }
}

pub trait ChatClient: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError>;
}

impl<T: ChatClient + ?Sized> ChatClient for Arc<T> {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).complete(req)
    }
}

/// Validates the request, then times the backend call.
pub fn complete(client: &dyn ChatClient, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
    req.validate()?;
    let start = Instant::now();
    let mut r = client.complete(req)?;
    if r.latency_ms == 0 {
        r.latency_ms = start.elapsed().as_millis() as u64;
    }
    Ok(r)
}

/// Always fails with a transport error.
#[derive(Debug, Clone, Default)]
pub struct OfflineClient;

impl ChatClient for OfflineClient {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        Err(LlmError::Transport(format!("offline: {} request not sent", req.tag)))
    }
}

/// Chat backends per pipeline role plus the search backend.
#[derive(Clone)]
pub struct Gateway {
    /// Query generation, answer wording and question decomposition.
    pub generator: Arc<dyn ChatClient>,
    /// Query validation pass.
    pub validator: Arc<dyn ChatClient>,
    /// Descriptive answer composition.
    pub composer: Arc<dyn ChatClient>,
    /// SPARQL and content judging, fact extraction, paraphrasing.
    pub judge: Arc<dyn ChatClient>,
    pub search: Arc<dyn SearchClient>,
}

impl Gateway {
    /// One chat backend for every role and no search.
    pub fn uniform(client: Arc<dyn ChatClient>) -> Self {
        Self {
            generator: client.clone(),
            validator: client.clone(),
            composer: client.clone(),
            judge: client,
            search: Arc::new(NoSearch),
        }
    }

    pub fn with_search(mut self, search: Arc<dyn SearchClient>) -> Self {
        self.search = search;
        self
    }
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Gateway")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_images_and_is_stable() {
        let a = ChatRequest::new("generate", "sys", "How many lakes?");
        let b = a.clone().with_part(Part::Image {
            media_type: "image/png".into(),
            data: vec![1, 2, 3],
        });
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
        let c = ChatRequest::new("validate", "sys", "How many lakes?");
        assert_ne!(a.digest(), c.digest());
        // field boundaries matter
        assert_ne!(
            ChatRequest::new("t", "ab", "c").digest(),
            ChatRequest::new("t", "a", "bc").digest()
        );
    }

    #[test]
    fn request_validation() {
        let mut r = ChatRequest::new("generate", "", "q");
        r.temperature = 2.5;
        assert!(matches!(complete(&OfflineClient, &r), Err(LlmError::InvalidRequest(_))));
        r.temperature = 0.0;
        r.parts.clear();
        assert!(r.validate().is_err());
        let r = ChatRequest::new("generate", "", "q");
        let e = complete(&OfflineClient, &r).unwrap_err();
        assert!(e.is_retryable());
    }

    #[test]
    fn parts_serialize_images_as_base64() {
        let p = Part::Image {
            media_type: "image/png".into(),
            data: b"png".to_vec(),
        };
        let j = serde_json::to_value(&p).unwrap();
        assert_eq!(j["data"], "cG5n");
        assert_eq!(serde_json::from_value::<Part>(j).unwrap(), p);
        assert_eq!(p.data_url().unwrap(), "data:image/png;base64,cG5n");
    }
}

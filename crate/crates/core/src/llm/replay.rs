use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{ChatClient, ChatRequest, ChatResponse, LlmError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub digest: String,
    pub request: ChatRequest,
    pub response: ChatResponse,
}

/// Serves recorded responses by request digest.
#[derive(Debug, Clone, Default)]
pub struct ReplayClient {
    responses: HashMap<String, ChatResponse>,
}

impl ReplayClient {
    pub fn new(records: impl IntoIterator<Item = TranscriptRecord>) -> Self {
        Self {
            responses: records.into_iter().map(|r| (r.digest, r.response)).collect(),
        }
    }

    pub fn from_jsonl(text: &str) -> Result<Self, LlmError> {
        let mut records = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let r: TranscriptRecord =
                serde_json::from_str(line).map_err(|e| LlmError::Malformed(format!("transcript line {}: {e}", i + 1)))?;
            if !seen.insert(r.digest.clone()) {
                return Err(LlmError::Malformed(format!("transcript line {}: duplicate digest {}", i + 1, r.digest)));
            }
            records.push(r);
        }
        Ok(Self::new(records))
    }

    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::Io(format!("{}: {e}", path.display())))?;
        Self::from_jsonl(&text)
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl ChatClient for ReplayClient {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let digest = req.digest();
        self.responses.get(&digest).cloned().ok_or(LlmError::ReplayMiss { digest })
    }
}

struct RecorderState {
    file: File,
    seen: HashMap<String, ChatResponse>,
}

/// Wraps a client and appends each new request/response pair to a transcript.
/// A repeated request is answered from the transcript without calling the
/// inner client again.
pub struct Recorder<C> {
    inner: C,
    state: Arc<Mutex<RecorderState>>,
}

impl<C: ChatClient> Recorder<C> {
    /// Appends to `path`, keeping records already present.
    pub fn new(inner: C, path: &Path) -> Result<Self, LlmError> {
        let io = |e: std::io::Error| LlmError::Io(format!("{}: {e}", path.display()));
        let mut seen = HashMap::new();
        if path.exists() {
            for line in BufReader::new(File::open(path).map_err(io)?).lines() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                let r: TranscriptRecord = serde_json::from_str(&line).map_err(|e| LlmError::Malformed(e.to_string()))?;
                seen.insert(r.digest, r.response);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
        Ok(Self {
            inner,
            state: Arc::new(Mutex::new(RecorderState { file, seen })),
        })
    }

    /// Another client recording into the same transcript.
    pub fn wrap<D: ChatClient>(&self, inner: D) -> Recorder<D> {
        Recorder {
            inner,
            state: self.state.clone(),
        }
    }
}

impl<C: ChatClient> ChatClient for Recorder<C> {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let digest = req.digest();
        if let Some(r) = self.state.lock().unwrap().seen.get(&digest) {
            return Ok(r.clone());
        }
        let response = self.inner.complete(req)?;
        let mut st = self.state.lock().unwrap();
        if let Some(r) = st.seen.get(&digest) {
            return Ok(r.clone());
        }
        let rec = TranscriptRecord {
            digest: digest.clone(),
            request: req.clone(),
            response: response.clone(),
        };
        let line = serde_json::to_string(&rec).expect("record serializes");
        writeln!(st.file, "{line}").and_then(|_| st.file.flush()).map_err(|e| LlmError::Io(format!("transcript write: {e}")))?;
        st.seen.insert(digest, response.clone());
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ScriptRule, ScriptedClient};
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Counting(AtomicUsize, ScriptedClient);

    impl ChatClient for Counting {
        fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            self.1.complete(req)
        }
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let inner = Counting(AtomicUsize::new(0), ScriptedClient::new(vec![ScriptRule::new("(.*)", "re: $1", None).unwrap()]));
        let rec = Recorder::new(inner, &path).unwrap();
        let a = ChatRequest::new("generate", "s", "one");
        let b = ChatRequest::new("generate", "s", "two");
        let ra = rec.complete(&a).unwrap();
        rec.complete(&b).unwrap();
        assert_eq!(rec.complete(&a).unwrap(), ra);
        assert_eq!(rec.inner.0.load(Ordering::SeqCst), 2);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        let replay = ReplayClient::from_file(&path).unwrap();
        assert_eq!(replay.complete(&a).unwrap(), ra);
        let novel = ChatRequest::new("generate", "s", "three");
        assert_eq!(replay.complete(&novel).unwrap_err(), LlmError::ReplayMiss { digest: novel.digest() });
    }

    #[test]
    fn empty_session_gives_empty_transcript() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        drop(Recorder::new(ScriptedClient::default(), &path).unwrap());
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
        assert!(ReplayClient::from_file(&path).unwrap().is_empty());
    }
}

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::prompts::Stage;
use super::trace::GenerationTrace;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("no recorded response for prompt digest {0}")]
    UnknownDigest(String),
    #[error("backend does not support embeddings")]
    EmbedUnsupported,
    #[error("HTTP status {0}: {1}")]
    Status(u16, String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("unexpected response shape: {0}")]
    Protocol(String),
    #[error("fixture: {0}")]
    Fixture(String),
    #[error("script has no response for stage {0}")]
    ScriptExhausted(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// A text-generation service. Deterministic implementations must answer
/// identical `(prompt, history)` pairs identically.
pub trait TextBackend: Send + Sync {
    fn complete(&self, prompt: &str, history: &[Message]) -> Result<String, BackendError>;

    fn embed(&self, _text: &str) -> Result<Vec<f64>, BackendError> {
        Err(BackendError::EmbedUnsupported)
    }
}

impl<B: TextBackend + ?Sized> TextBackend for &B {
    fn complete(&self, prompt: &str, history: &[Message]) -> Result<String, BackendError> {
        (**self).complete(prompt, history)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        (**self).embed(text)
    }
}

impl<B: TextBackend + ?Sized> TextBackend for Box<B> {
    fn complete(&self, prompt: &str, history: &[Message]) -> Result<String, BackendError> {
        (**self).complete(prompt, history)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        (**self).embed(text)
    }
}

/// SHA-256 (hex) identifying one exchange: every history message as
/// `role\ncontent\n\x1e`, then `user\n` and the prompt.
pub fn exchange_digest(prompt: &str, history: &[Message]) -> String {
    let mut h = Sha256::new();
    for m in history {
        let role = match m.role {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        };
        h.update(role.as_bytes());
        h.update(b"\n");
        h.update(m.content.as_bytes());
        h.update(b"\n\x1e");
    }
    h.update(b"user\n");
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())
}

pub fn embed_digest(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(b"embed\n");
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

/// Deterministic bag-of-words embedding: each lower-cased word adds one to
/// a bucket picked by its hash.
pub fn hashed_bag_of_words(text: &str, dims: usize) -> Vec<f64> {
    let mut v = vec![0.0; dims.max(1)];
    for word in text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
        let d = Sha256::digest(word.to_lowercase().as_bytes());
        let bucket = u64::from_le_bytes(d[..8].try_into().expect("8 bytes")) % v.len() as u64;
        v[bucket as usize] += 1.0;
    }
    v
}

pub const BAG_OF_WORDS_DIMS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub prompt_sha256: String,
    pub response: String,
}

/// Serves recorded responses by exchange digest. Any unrecorded exchange is
/// an error, so prompt drift cannot pass silently.
#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    responses: BTreeMap<String, String>,
}

impl ReplayBackend {
    pub fn from_records(records: impl IntoIterator<Item = FixtureRecord>) -> Self {
        let mut responses = BTreeMap::new();
        for r in records {
            responses.entry(r.prompt_sha256).or_insert(r.response);
        }
        Self { responses }
    }

    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        let records: Vec<FixtureRecord> =
            serde_json::from_str(text).map_err(|e| BackendError::Fixture(e.to_string()))?;
        Ok(Self::from_records(records))
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| BackendError::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_trace(trace: &GenerationTrace) -> Self {
        Self::from_records(trace.records.iter().map(|r| FixtureRecord {
            prompt_sha256: r.prompt_sha256.clone(),
            response: r.response.clone(),
        }))
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    fn lookup(&self, digest: String) -> Result<&String, BackendError> {
        self.responses.get(&digest).ok_or(BackendError::UnknownDigest(digest))
    }
}

impl TextBackend for ReplayBackend {
    fn complete(&self, prompt: &str, history: &[Message]) -> Result<String, BackendError> {
        self.lookup(exchange_digest(prompt, history)).cloned()
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        let raw = self.lookup(embed_digest(text))?;
        serde_json::from_str(raw).map_err(|e| BackendError::Fixture(format!("embedding: {e}")))
    }
}

/// Wraps a backend and keeps every exchange as a fixture record.
pub struct RecordingBackend<B> {
    inner: B,
    records: Mutex<Vec<FixtureRecord>>,
}

impl<B: TextBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            records: Mutex::new(Vec::new()),
        }
    }

    /// Records in issue order, first occurrence of each digest only.
    pub fn records(&self) -> Vec<FixtureRecord> {
        let mut seen = std::collections::BTreeSet::new();
        self.records
            .lock()
            .expect("recorder lock")
            .iter()
            .filter(|r| seen.insert(r.prompt_sha256.clone()))
            .cloned()
            .collect()
    }

    pub fn to_fixture_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.records()).expect("records serialize");
        text.push('\n');
        text
    }

    fn push(&self, prompt_sha256: String, response: String) {
        self.records.lock().expect("recorder lock").push(FixtureRecord {
            prompt_sha256,
            response,
        });
    }
}

impl<B: TextBackend> TextBackend for RecordingBackend<B> {
    fn complete(&self, prompt: &str, history: &[Message]) -> Result<String, BackendError> {
        let response = self.inner.complete(prompt, history)?;
        self.push(exchange_digest(prompt, history), response.clone());
        Ok(response)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        let v = self.inner.embed(text)?;
        let raw = serde_json::to_string(&v).expect("vector serializes");
        self.push(embed_digest(text), raw);
        Ok(v)
    }
}

/// Answers each stage from a queue of hand-written responses; the last
/// response of a stage repeats once its queue is drained. Embeddings use
/// [`hashed_bag_of_words`].
/// Pending responses for one stage and the last one served.
type StageQueue = (VecDeque<String>, Option<String>);

#[derive(Debug, Default)]
pub struct ScriptedBackend {
    queues: Mutex<BTreeMap<Stage, StageQueue>>,
}

impl ScriptedBackend {
    pub fn new(script: BTreeMap<Stage, Vec<String>>) -> Self {
        let queues = script
            .into_iter()
            .map(|(stage, responses)| (stage, (responses.into(), None)))
            .collect();
        Self {
            queues: Mutex::new(queues),
        }
    }

    /// Reads a JSON object of stage name to a response or list of responses.
    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        let raw: BTreeMap<String, serde_json::Value> =
            serde_json::from_str(text).map_err(|e| BackendError::Fixture(e.to_string()))?;
        let mut script = BTreeMap::new();
        for (name, value) in raw {
            let stage =
                Stage::from_name(&name).ok_or_else(|| BackendError::Fixture(format!("unknown stage '{name}'")))?;
            let responses = match value {
                serde_json::Value::String(s) => vec![s],
                other => {
                    serde_json::from_value(other).map_err(|e| BackendError::Fixture(format!("stage '{name}': {e}")))?
                }
            };
            script.insert(stage, responses);
        }
        Ok(Self::new(script))
    }
}

impl TextBackend for ScriptedBackend {
    fn complete(&self, prompt: &str, _history: &[Message]) -> Result<String, BackendError> {
        let stage =
            Stage::classify(prompt).ok_or_else(|| BackendError::ScriptExhausted("unrecognised prompt".into()))?;
        let mut queues = self.queues.lock().expect("script lock");
        let (queue, last) = queues
            .get_mut(&stage)
            .ok_or_else(|| BackendError::ScriptExhausted(stage.name().into()))?;
        if let Some(next) = queue.pop_front() {
            *last = Some(next);
        }
        last.clone()
            .ok_or_else(|| BackendError::ScriptExhausted(stage.name().into()))
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        Ok(hashed_bag_of_words(text, BAG_OF_WORDS_DIMS))
    }
}

//! Chat-completion HTTP client (OpenAI-compatible wire format).

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

use super::backend::{BackendError, Message, Role, TextBackend};

pub const API_KEY_VAR: &str = "STORYFORGE_API_KEY";
pub const BASE_URL_VAR: &str = "STORYFORGE_BASE_URL";
pub const MODEL_VAR: &str = "STORYFORGE_MODEL";
pub const EMBED_MODEL_VAR: &str = "STORYFORGE_EMBED_MODEL";

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4o-mini";
pub const DEFAULT_EMBED_MODEL: &str = "text-embedding-3-large";

#[derive(Debug, Clone, PartialEq)]
pub struct LiveConfig {
    pub base_url: String,
    pub model: String,
    pub embed_model: String,
    pub api_key: String,
    pub max_in_flight: usize,
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub timeout: Duration,
    pub temperature: Option<f64>,
}

impl LiveConfig {
    pub fn new(api_key: impl Into<String>) -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.to_string(),
            model: DEFAULT_MODEL.to_string(),
            embed_model: DEFAULT_EMBED_MODEL.to_string(),
            api_key: api_key.into(),
            max_in_flight: 4,
            max_retries: 4,
            initial_backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(180),
            temperature: None,
        }
    }

    /// Reads the key, base URL and model ids from the environment. Returns
    /// `None` when the key is unset or blank.
    pub fn from_env() -> Option<Self> {
        let key = std::env::var(API_KEY_VAR).ok().filter(|k| !k.trim().is_empty())?;
        let mut cfg = Self::new(key);
        let var = |name: &str| std::env::var(name).ok().filter(|v| !v.trim().is_empty());
        if let Some(url) = var(BASE_URL_VAR) {
            cfg.base_url = url;
        }
        if let Some(model) = var(MODEL_VAR) {
            cfg.model = model;
        }
        if let Some(model) = var(EMBED_MODEL_VAR) {
            cfg.embed_model = model;
        }
        Some(cfg)
    }
}

/// Counting semaphore bounding concurrent requests.
struct Slots {
    free: Mutex<usize>,
    ready: Condvar,
}

struct SlotGuard<'a>(&'a Slots);

impl Slots {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            ready: Condvar::new(),
        }
    }

    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().expect("slot lock");
        while *free == 0 {
            free = self.ready.wait(free).expect("slot lock");
        }
        *free -= 1;
        SlotGuard(self)
    }
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("slot lock") += 1;
        self.0.ready.notify_one();
    }
}

pub struct LiveBackend {
    config: LiveConfig,
    client: reqwest::blocking::Client,
    slots: Slots,
}

enum Attempt {
    Done(Value),
    Transient(BackendError),
    Fatal(BackendError),
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let slots = Slots::new(config.max_in_flight);
        Ok(Self { config, client, slots })
    }

    pub fn config(&self) -> &LiveConfig {
        &self.config
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{path}", self.config.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, url: &str, body: &Value) -> Attempt {
        let _slot = self.slots.acquire();
        let sent = self
            .client
            .post(url)
            .bearer_auth(&self.config.api_key)
            .json(body)
            .send();
        let resp = match sent {
            Ok(r) => r,
            Err(e) => return Attempt::Transient(BackendError::Transport(e.to_string())),
        };
        let status = resp.status();
        let text = resp.text().unwrap_or_default();
        if status.is_success() {
            return match serde_json::from_str(&text) {
                Ok(v) => Attempt::Done(v),
                Err(e) => Attempt::Fatal(BackendError::Protocol(e.to_string())),
            };
        }
        let err = BackendError::Status(status.as_u16(), text.chars().take(500).collect());
        if status.as_u16() == 429 || status.is_server_error() {
            Attempt::Transient(err)
        } else {
            Attempt::Fatal(err)
        }
    }

    fn post(&self, path: &str, body: Value) -> Result<Value, BackendError> {
        let url = self.url(path);
        let mut delay = self.config.initial_backoff;
        let mut attempt = 0;
        loop {
            match self.attempt(&url, &body) {
                Attempt::Done(v) => return Ok(v),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Transient(e) if attempt >= self.config.max_retries => return Err(e),
                Attempt::Transient(e) => {
                    log::warn!("{path}: {e}; retrying in {delay:?}");
                    thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
            }
        }
    }
}

fn role_name(role: Role) -> &'static str {
    match role {
        Role::System => "system",
        Role::User => "user",
        Role::Assistant => "assistant",
    }
}

impl TextBackend for LiveBackend {
    fn complete(&self, prompt: &str, history: &[Message]) -> Result<String, BackendError> {
        let mut messages: Vec<Value> = history
            .iter()
            .map(|m| json!({"role": role_name(m.role), "content": m.content}))
            .collect();
        messages.push(json!({"role": "user", "content": prompt}));
        let mut body = json!({"model": self.config.model, "messages": messages});
        if let Some(t) = self.config.temperature {
            body["temperature"] = json!(t);
        }
        let v = self.post("chat/completions", body)?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Protocol("missing choices[0].message.content".into()))
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        let body = json!({"model": self.config.embed_model, "input": text});
        let v = self.post("embeddings", body)?;
        v.pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .and_then(|xs| xs.iter().map(Value::as_f64).collect::<Option<Vec<_>>>())
            .ok_or_else(|| BackendError::Protocol("missing data[0].embedding".into()))
    }
}

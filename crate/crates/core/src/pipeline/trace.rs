use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::prompts::Stage;

/// One backend exchange. `parse_outcome` is `ok` or the parse error;
/// `verdict` carries the validation result where the stage has one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub stage: Stage,
    pub round: usize,
    pub prompt: String,
    pub prompt_sha256: String,
    pub response: String,
    pub parse_outcome: String,
    #[serde(default)]
    pub verdict: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GenerationTrace {
    pub records: Vec<TraceRecord>,
}

impl GenerationTrace {
    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn last_mut(&mut self) -> Option<&mut TraceRecord> {
        self.records.last_mut()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn count(&self, stage: Stage) -> usize {
        self.records.iter().filter(|r| r.stage == stage).count()
    }

    /// JSON lines, one record per line, each line newline-terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(Self { records })
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }
}

use std::path::Path;

use anyhow::{Context, Result};
use storyforge::pipeline::live::API_KEY_VAR;
use storyforge::pipeline::{
    BackendKind, GenerationTrace, LiveBackend, LiveConfig, ReplayBackend, StubBackend, TextBackend,
};

use crate::output::{read, usage};

pub fn open(kind: BackendKind, fixtures: Option<&Path>, seed: u64) -> Result<Box<dyn TextBackend>> {
    match kind {
        BackendKind::Stub => Ok(Box::new(StubBackend::new(seed))),
        BackendKind::Replay => {
            let path = fixtures.ok_or_else(|| usage("--backend replay needs --fixtures PATH"))?;
            Ok(Box::new(load_replay(path)?))
        }
        BackendKind::Live => {
            let config = LiveConfig::from_env().ok_or_else(|| {
                usage(format!(
                    "{API_KEY_VAR} is not set; export it or pick --backend stub or --backend replay"
                ))
            })?;
            Ok(Box::new(LiveBackend::new(config)?))
        }
    }
}

/// A `.jsonl` file is read as a generation trace, anything else as a fixture array.
pub fn load_replay(path: &Path) -> Result<ReplayBackend> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        let trace = GenerationTrace::from_jsonl(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
        Ok(ReplayBackend::from_trace(&trace))
    } else {
        ReplayBackend::load(path).with_context(|| format!("loading {}", path.display()))
    }
}

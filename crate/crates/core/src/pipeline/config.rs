use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::pathfind::DEFAULT_ITERATION_CAP;
use crate::submap::DEFAULT_SUBMAP_SIZE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Stub,
    Replay,
    Live,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Stub => "stub",
            BackendKind::Replay => "replay",
            BackendKind::Live => "live",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub min_paragraphs: usize,
    pub max_paragraphs: usize,
    pub n_objectives: usize,
    /// Backend calls allowed per stage, the first attempt included.
    pub max_refinement_rounds: usize,
    pub astar_iteration_cap: usize,
    pub scaling_enabled: bool,
    /// Roll back scaling placements that disconnect an objective.
    pub safe_scaling: bool,
    /// Ask the model to critique the map against the story (recorded only).
    pub critique: bool,
    pub submap_size: usize,
    pub arena_waves: usize,
    pub collect_items: usize,
    pub height_base: i32,
    pub rng_seed: u64,
    pub backend: BackendKind,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            min_paragraphs: 4,
            max_paragraphs: 5,
            n_objectives: 8,
            max_refinement_rounds: 3,
            astar_iteration_cap: DEFAULT_ITERATION_CAP,
            scaling_enabled: true,
            safe_scaling: false,
            critique: true,
            submap_size: DEFAULT_SUBMAP_SIZE,
            arena_waves: 3,
            collect_items: 5,
            height_base: 0,
            rng_seed: 0,
            backend: BackendKind::Stub,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: &str| Err(PipelineError::Config(msg.to_string()));
        if self.max_refinement_rounds < 1 {
            return bad("max_refinement_rounds must be at least 1");
        }
        if self.min_paragraphs < 1 || self.min_paragraphs > self.max_paragraphs {
            return bad("paragraph range must satisfy 1 <= min_paragraphs <= max_paragraphs");
        }
        if self.n_objectives < 1 {
            return bad("n_objectives must be at least 1");
        }
        if self.astar_iteration_cap < 1 {
            return bad("astar_iteration_cap must be at least 1");
        }
        if self.submap_size < 9 {
            return bad("submap_size must be at least 9");
        }
        if self.arena_waves < 1 || self.collect_items < 1 {
            return bad("arena_waves and collect_items must be at least 1");
        }
        Ok(())
    }

    /// The paragraph count as the story prompt phrases it, e.g. `4-5`.
    pub fn paragraph_phrase(&self) -> String {
        if self.min_paragraphs == self.max_paragraphs {
            self.min_paragraphs.to_string()
        } else {
            format!("{}-{}", self.min_paragraphs, self.max_paragraphs)
        }
    }
}

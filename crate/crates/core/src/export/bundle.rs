use serde::{Deserialize, Serialize};

use super::{render_grid, render_world, BlockWorld, ExportError, Raster, RenderStyle, TileBlockTable};
use crate::map::{Objective, Pos, StorySpec, TileClassification, TileGrid, TileLegend, WalkableSet};
use crate::metrics::{evaluate_map, MapEvaluation, MetricError};
use crate::pathfind::{WalkMap, WalkOverrides};
use crate::pipeline::PipelineConfig;
use crate::scaling::{Placement, ScalingPlan, StampedStructure};
use crate::submap::{Portal, SubMap};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterSketch {
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Validity {
    /// World-generation rounds used, including the accepted one.
    pub refinement_rounds: usize,
    /// Every objective reached by capped A* on the unscaled map.
    pub pre_scaling: bool,
    /// Every objective reachable after structures were stamped.
    pub post_scaling: bool,
    /// Indices of objectives unreachable after scaling.
    pub unreachable_objectives: Vec<usize>,
    pub submaps: bool,
}

/// Everything one generation run produced. Rendering or evaluating a bundle
/// needs nothing else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelBundle {
    pub schema_version: u32,
    pub prompts_version: String,
    pub config: PipelineConfig,
    pub story: StorySpec,
    pub characters: Vec<CharacterSketch>,
    pub legend: TileLegend,
    pub walkable: WalkableSet,
    pub important: Vec<char>,
    pub start: Pos,
    pub grid_unscaled: TileGrid,
    pub grid: TileGrid,
    pub classification: TileClassification,
    pub objectives: Vec<Objective>,
    pub portals: Vec<Portal>,
    pub submaps: Vec<SubMap>,
    pub scaling_plan: ScalingPlan,
    pub placements: Vec<Placement>,
    pub rolled_back: Vec<Placement>,
    pub structures: Vec<StampedStructure>,
    pub walk_overrides: WalkOverrides,
    pub tile_blocks: TileBlockTable,
    pub blocks: BlockWorld,
    pub validity: Validity,
    pub critique: Option<String>,
    pub trace_sha256: String,
}

impl LevelBundle {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("bundle serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, ExportError> {
        #[derive(Deserialize)]
        struct Probe {
            #[serde(default)]
            schema_version: u32,
        }
        let probe: Probe = serde_json::from_str(text).map_err(|e| ExportError::Json(e.to_string()))?;
        if probe.schema_version != SCHEMA_VERSION {
            return Err(ExportError::SchemaVersion(probe.schema_version));
        }
        serde_json::from_str(text).map_err(|e| ExportError::Json(e.to_string()))
    }

    /// Walkability of the final map, structure footprints included.
    pub fn walk_map(&self) -> WalkMap {
        WalkMap::from_grid(&self.grid, &self.walkable).with_overrides(&self.walk_overrides)
    }

    pub fn objective_positions(&self) -> Vec<Pos> {
        self.objectives.iter().map(|o| o.position).collect()
    }

    pub fn evaluate(&self, map_id: impl Into<String>) -> Result<MapEvaluation, MetricError> {
        evaluate_map(
            map_id,
            &self.grid,
            &self.walk_map(),
            self.start,
            &self.objective_positions(),
        )
    }

    pub fn render(&self, style: RenderStyle, cell: usize) -> Result<Raster, ExportError> {
        match style {
            RenderStyle::Tiles => render_grid(&self.grid, cell),
            RenderStyle::Blocks => render_world(&self.blocks, cell),
        }
    }
}

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Placement;
use crate::map::Pos;
use crate::pathfind::WalkOverrides;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("no structure template for tile '{0}' with footprint {1}")]
    MissingTemplate(char, usize),
    #[error("invalid structure template: {0}")]
    Invalid(String),
    #[error("structure template JSON: {0}")]
    Json(String),
}

/// One block of a structure, in template-local coordinates: `x` runs along
/// columns, `z` along rows, `y` upward from the first layer above ground.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Voxel {
    pub x: i32,
    pub y: i32,
    pub z: i32,
    pub block: String,
}

/// A multi-block structure that replaces an `s × s` footprint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureTemplate {
    pub tile: char,
    pub footprint: usize,
    /// Footprint-local `(row, col)` border cells that stay walkable.
    #[serde(default)]
    pub entrances: Vec<Pos>,
    pub voxels: Vec<Voxel>,
}

impl StructureTemplate {
    pub fn from_json(text: &str) -> Result<Self, TemplateError> {
        let t: Self = serde_json::from_str(text).map_err(|e| TemplateError::Json(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    /// Checks that the bottom layer covers exactly the footprint, voxels stay
    /// inside it, and entrances sit on its border.
    pub fn validate(&self) -> Result<(), TemplateError> {
        let s = self.footprint as i32;
        if s < 1 {
            return Err(TemplateError::Invalid("footprint must be positive".into()));
        }
        let mut base = vec![false; (s * s) as usize];
        for v in &self.voxels {
            if v.block.trim().is_empty() {
                return Err(TemplateError::Invalid("empty block name".into()));
            }
            if !(0..s).contains(&v.x) || !(0..s).contains(&v.z) || v.y < 0 {
                return Err(TemplateError::Invalid(format!(
                    "voxel ({}, {}, {}) outside footprint {s}",
                    v.x, v.y, v.z
                )));
            }
            if v.y == 0 {
                base[(v.z * s + v.x) as usize] = true;
            }
        }
        if base.iter().any(|b| !b) {
            return Err(TemplateError::Invalid("base layer does not cover the footprint".into()));
        }
        let last = self.footprint - 1;
        for &(r, c) in &self.entrances {
            let on_border = r <= last && c <= last && (r == 0 || c == 0 || r == last || c == last);
            if !on_border {
                return Err(TemplateError::Invalid(format!("entrance {:?} not on border", (r, c))));
            }
        }
        Ok(())
    }

    /// A plain walled hut: cobblestone base, two layers of plank walls with a
    /// door in the middle of the south wall, and a flat roof.
    pub fn plain(tile: char, size: usize) -> Self {
        let s = size as i32;
        let door = (size - 1, size / 2);
        let mut voxels = Vec::new();
        for z in 0..s {
            for x in 0..s {
                voxels.push(voxel(x, 0, z, "cobblestone"));
                let border = x == 0 || z == 0 || x == s - 1 || z == s - 1;
                let is_door = (z as usize, x as usize) == door;
                if border && !is_door {
                    voxels.push(voxel(x, 1, z, "oak_planks"));
                    voxels.push(voxel(x, 2, z, "oak_planks"));
                }
                voxels.push(voxel(x, 3, z, "spruce_planks"));
            }
        }
        Self {
            tile,
            footprint: size,
            entrances: vec![door],
            voxels,
        }
    }
}

fn voxel(x: i32, y: i32, z: i32, block: &str) -> Voxel {
    Voxel {
        x,
        y,
        z,
        block: block.to_string(),
    }
}

/// Per-tile template collections, optionally backed by [`StructureTemplate::plain`].
#[derive(Debug, Clone, Default)]
pub struct TemplateLibrary {
    by_tile: BTreeMap<char, Vec<StructureTemplate>>,
    fallback: bool,
}

impl TemplateLibrary {
    /// An empty library that answers every request with the plain hut.
    pub fn with_fallback() -> Self {
        Self {
            by_tile: BTreeMap::new(),
            fallback: true,
        }
    }

    pub fn strict() -> Self {
        Self::default()
    }

    pub fn add(&mut self, template: StructureTemplate) -> Result<(), TemplateError> {
        template.validate()?;
        self.by_tile.entry(template.tile).or_default().push(template);
        Ok(())
    }

    /// Parses a single template object or an array of them.
    pub fn add_json(&mut self, text: &str) -> Result<usize, TemplateError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| TemplateError::Json(e.to_string()))?;
        let templates: Vec<StructureTemplate> = match value {
            serde_json::Value::Array(_) => serde_json::from_value(value),
            _ => serde_json::from_value(value).map(|t| vec![t]),
        }
        .map_err(|e| TemplateError::Json(e.to_string()))?;
        let n = templates.len();
        for t in templates {
            self.add(t)?;
        }
        Ok(n)
    }

    pub fn matching(&self, tile: char, size: usize) -> Vec<StructureTemplate> {
        let found: Vec<StructureTemplate> = self
            .by_tile
            .get(&tile)
            .map(|ts| ts.iter().filter(|t| t.footprint == size).cloned().collect())
            .unwrap_or_default();
        if found.is_empty() && self.fallback {
            vec![StructureTemplate::plain(tile, size)]
        } else {
            found
        }
    }
}

/// A placed structure with absolute coordinates: voxel `x`/`z` are grid
/// columns/rows, entrances are grid cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StampedStructure {
    pub placement: Placement,
    pub template_index: usize,
    pub entrances: Vec<Pos>,
    pub voxels: Vec<Voxel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StampResult {
    pub structures: Vec<StampedStructure>,
    pub overrides: WalkOverrides,
}

impl StampResult {
    pub fn voxels(&self) -> impl Iterator<Item = &Voxel> {
        self.structures.iter().flat_map(|s| s.voxels.iter())
    }
}

/// Chooses a template per placement (seeded) and translates it into place.
/// Footprints become impassable except for the template's entrances.
pub fn stamp_structures(
    placements: &[Placement],
    library: &TemplateLibrary,
    seed: u64,
) -> Result<StampResult, TemplateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = StampResult::default();
    for placement in placements {
        let candidates = library.matching(placement.tile, placement.size);
        if candidates.is_empty() {
            return Err(TemplateError::MissingTemplate(placement.tile, placement.size));
        }
        let index = rng.gen_range(0..candidates.len());
        let template = &candidates[index];
        let (r0, c0) = placement.top_left;
        let voxels = template
            .voxels
            .iter()
            .map(|v| Voxel {
                x: v.x + c0 as i32,
                y: v.y,
                z: v.z + r0 as i32,
                block: v.block.clone(),
            })
            .collect();
        let entrances: Vec<Pos> = template.entrances.iter().map(|&(r, c)| (r + r0, c + c0)).collect();
        out.overrides.blocked.extend(placement.cells());
        out.overrides.opened.extend(entrances.iter().copied());
        out.structures.push(StampedStructure {
            placement: *placement,
            template_index: index,
            entrances,
            voxels,
        });
    }
    Ok(out)
}

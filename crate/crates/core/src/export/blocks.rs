use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ExportError;
use crate::map::{TileGrid, TileLegend, WalkableSet};
use crate::scaling::{StampedStructure, Voxel};

/// Sparse voxel world keyed by `(x, z, y)`, the export sort order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Voxel>", into = "Vec<Voxel>")]
pub struct BlockWorld {
    blocks: BTreeMap<(i32, i32, i32), String>,
}

/// Inclusive corner coordinates, each as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: [i32; 3],
    pub max: [i32; 3],
}

impl BlockWorld {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets a block, replacing whatever occupied the position.
    pub fn insert(&mut self, x: i32, y: i32, z: i32, block: &str) -> Result<(), ExportError> {
        if block.trim().is_empty() {
            return Err(ExportError::InvalidBlock(format!(
                "empty block name at ({x}, {y}, {z})"
            )));
        }
        self.blocks.insert((x, z, y), block.to_string());
        Ok(())
    }

    pub fn get(&self, x: i32, y: i32, z: i32) -> Option<&str> {
        self.blocks.get(&(x, z, y)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn palette(&self) -> BTreeSet<&str> {
        self.blocks.values().map(String::as_str).collect()
    }

    pub fn bounds(&self) -> Option<Bounds> {
        let mut it = self.blocks.keys();
        let &(x, z, y) = it.next()?;
        let mut b = Bounds {
            min: [x, y, z],
            max: [x, y, z],
        };
        for &(x, z, y) in it {
            for (i, v) in [x, y, z].into_iter().enumerate() {
                b.min[i] = b.min[i].min(v);
                b.max[i] = b.max[i].max(v);
            }
        }
        Some(b)
    }

    /// Records in `(x, z, y)` order.
    pub fn records(&self) -> Vec<Voxel> {
        self.blocks
            .iter()
            .map(|(&(x, z, y), block)| Voxel {
                x,
                y,
                z,
                block: block.clone(),
            })
            .collect()
    }

    /// Highest block of every occupied `(x, z)` column.
    pub fn surface(&self) -> BTreeMap<(i32, i32), (i32, &str)> {
        let mut top = BTreeMap::new();
        for (&(x, z, y), block) in &self.blocks {
            top.insert((x, z), (y, block.as_str()));
        }
        top
    }
}

impl TryFrom<Vec<Voxel>> for BlockWorld {
    type Error = ExportError;

    fn try_from(records: Vec<Voxel>) -> Result<Self, Self::Error> {
        let mut world = BlockWorld::new();
        for v in records {
            if world.get(v.x, v.y, v.z).is_some() {
                return Err(ExportError::InvalidBlock(format!(
                    "duplicate block at ({}, {}, {})",
                    v.x, v.y, v.z
                )));
            }
            world.insert(v.x, v.y, v.z, &v.block)?;
        }
        Ok(world)
    }
}

impl From<BlockWorld> for Vec<Voxel> {
    fn from(world: BlockWorld) -> Self {
        world.records()
    }
}

/// Compact JSON array, one `{x,y,z,block}` record per line, sorted by
/// `(x, z, y)`. An empty world is `[]`.
pub fn export_block_json(world: &BlockWorld) -> String {
    let records = world.records();
    if records.is_empty() {
        return "[]".to_string();
    }
    let lines: Vec<String> = records
        .iter()
        .map(|v| serde_json::to_string(v).expect("voxel serializes"))
        .collect();
    format!("[\n{}\n]", lines.join(",\n"))
}

pub fn import_block_json(text: &str) -> Result<BlockWorld, ExportError> {
    let records: Vec<Voxel> = serde_json::from_str(text).map_err(|e| ExportError::Json(e.to_string()))?;
    BlockWorld::try_from(records)
}

pub const DEFAULT_GROUND_BLOCK: &str = "dirt";
const SURFACE_HEIGHT: i32 = 2;

const PALETTE: &[(&[&str], &str)] = &[
    (&["protagonist", "player", "hero"], "emerald_block"),
    (&["antagonist", "villain", "boss", "enemy"], "redstone_block"),
    (&["portal", "gate"], "crying_obsidian"),
    (&["lava", "magma", "fire"], "lava"),
    (&["water", "river", "lake", "sea", "pond", "stream", "ocean"], "water"),
    (&["ice", "frozen"], "packed_ice"),
    (&["snow"], "snow_block"),
    (&["sand", "desert", "beach", "dune"], "sand"),
    (&["cactus"], "cactus"),
    (&["mud", "swamp", "bog", "marsh"], "mud"),
    (&["path", "road", "trail", "street"], "dirt_path"),
    (&["bridge", "dock"], "spruce_planks"),
    (
        &["house", "hut", "cabin", "home", "building", "shop", "inn"],
        "oak_planks",
    ),
    (&["castle", "tower", "fort", "keep"], "stone_bricks"),
    (&["wall", "fence", "ruin"], "cobblestone"),
    (&["temple", "shrine", "altar"], "chiseled_stone_bricks"),
    (&["tree", "forest", "wood", "oak", "grove"], "oak_log"),
    (&["pine", "spruce"], "spruce_log"),
    (&["leaf", "leaves", "bush", "hedge", "shrub"], "oak_leaves"),
    (&["flower", "garden", "meadow"], "moss_block"),
    (&["mountain", "cliff", "rock", "stone", "boulder", "hill"], "stone"),
    (&["cave", "mine", "crystal", "ore"], "deepslate"),
    (&["dirt", "soil", "field", "farm"], "coarse_dirt"),
    (&["grass", "plain", "lawn", "clearing"], "grass_block"),
    (&["chest", "treasure", "item", "npc", "villager", "sage"], "gold_block"),
];

/// Built-in block for a tile name, by keyword; `stone` if nothing matches.
pub fn fallback_block(name: &str) -> &'static str {
    let lower = name.to_lowercase();
    PALETTE
        .iter()
        .find(|(keys, _)| keys.iter().any(|k| lower.contains(k)))
        .map(|(_, block)| *block)
        .unwrap_or("stone")
}

/// Tile-char to block-name table plus the block laid under raised tiles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileBlockTable {
    pub blocks: BTreeMap<char, String>,
    pub ground: String,
}

impl Default for TileBlockTable {
    fn default() -> Self {
        Self {
            blocks: BTreeMap::new(),
            ground: DEFAULT_GROUND_BLOCK.to_string(),
        }
    }
}

impl TileBlockTable {
    /// Every legend entry mapped through [`fallback_block`].
    pub fn fallback(legend: &TileLegend) -> Self {
        let mut table = Self::default();
        for (name, ch) in legend.iter() {
            table.blocks.insert(ch, fallback_block(name).to_string());
        }
        table
    }

    /// Overrides entries with non-empty block names; returns how many applied.
    pub fn override_with(&mut self, proposed: &BTreeMap<char, String>) -> usize {
        let mut n = 0;
        for (&ch, block) in proposed {
            let block = block.trim();
            if !block.is_empty() {
                self.blocks.insert(ch, block.to_string());
                n += 1;
            }
        }
        n
    }

    pub fn block_of(&self, ch: char) -> Option<&str> {
        self.blocks.get(&ch).map(String::as_str)
    }
}

/// Lays every cell down as one ground block at `height_base` (row → `z`,
/// column → `x`). Walkable tiles are their own ground; other tiles sit on
/// the table's ground block with a two-high column of their own block.
/// Structure voxels then overlay their footprints starting one layer up.
pub fn tiles_to_blocks(
    grid: &TileGrid,
    walkable: &WalkableSet,
    table: &TileBlockTable,
    structures: &[StampedStructure],
    height_base: i32,
) -> Result<BlockWorld, ExportError> {
    let covered: BTreeSet<_> = structures.iter().flat_map(|s| s.placement.cells()).collect();
    let mut world = BlockWorld::new();
    for ((r, c), ch) in grid.cells() {
        let block = table.block_of(ch).ok_or(ExportError::MissingBlockMapping(ch))?;
        let (x, z) = (c as i32, r as i32);
        if walkable.contains(&ch) {
            world.insert(x, height_base, z, block)?;
            continue;
        }
        world.insert(x, height_base, z, &table.ground)?;
        if !covered.contains(&(r, c)) {
            for dy in 1..=SURFACE_HEIGHT {
                world.insert(x, height_base + dy, z, block)?;
            }
        }
    }
    for v in structures.iter().flat_map(|s| s.voxels.iter()) {
        world.insert(v.x, height_base + 1 + v.y, v.z, &v.block)?;
    }
    Ok(world)
}

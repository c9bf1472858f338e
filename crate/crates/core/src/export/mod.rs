//! Block-level world export, the level bundle document, and top-down renders.

mod blocks;
mod bundle;
mod render;

use thiserror::Error;

pub use blocks::{
    export_block_json, fallback_block, import_block_json, tiles_to_blocks, BlockWorld, Bounds, TileBlockTable,
    DEFAULT_GROUND_BLOCK,
};
pub use bundle::{CharacterSketch, LevelBundle, Validity, SCHEMA_VERSION};
pub use render::{colour_for, render_grid, render_world, Raster, RenderStyle, DEFAULT_CELL_SIZE};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExportError {
    #[error("no block mapping for tile '{0}'")]
    MissingBlockMapping(char),
    #[error("nothing to render")]
    EmptyInput,
    #[error("invalid block: {0}")]
    InvalidBlock(String),
    #[error("JSON: {0}")]
    Json(String),
    #[error("unsupported bundle schema version {0}")]
    SchemaVersion(u32),
}

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BlockWorld, ExportError};
use crate::map::TileGrid;

pub const DEFAULT_CELL_SIZE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderStyle {
    /// One flat square per tile character.
    #[default]
    Tiles,
    /// Colour of the highest block in each column.
    Blocks,
}

/// RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl Raster {
    fn blank(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![[0; 3]; width * height],
        }
    }

    fn fill_cell(&mut self, row: usize, col: usize, cell: usize, colour: [u8; 3]) {
        for y in row * cell..(row + 1) * cell {
            let start = y * self.width + col * cell;
            self.pixels[start..start + cell].fill(colour);
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    /// Binary portable pixmap (P6).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }
}

/// Stable colour for a key: the first three bytes of its SHA-256 digest.
pub fn colour_for(key: &str) -> [u8; 3] {
    let d = Sha256::digest(key.as_bytes());
    [d[0], d[1], d[2]]
}

pub fn render_grid(grid: &TileGrid, cell: usize) -> Result<Raster, ExportError> {
    if grid.is_empty() || grid.cols() == 0 || cell == 0 {
        return Err(ExportError::EmptyInput);
    }
    let mut img = Raster::blank(grid.cols() * cell, grid.rows() * cell);
    for ((r, c), ch) in grid.cells() {
        img.fill_cell(r, c, cell, colour_for(&ch.to_string()));
    }
    Ok(img)
}

/// Top-down view of a world: `x` across, `z` down, coloured by the highest
/// block of each column. Empty columns stay black.
pub fn render_world(world: &BlockWorld, cell: usize) -> Result<Raster, ExportError> {
    let bounds = world.bounds().ok_or(ExportError::EmptyInput)?;
    if cell == 0 {
        return Err(ExportError::EmptyInput);
    }
    let width = (bounds.max[0] - bounds.min[0] + 1) as usize;
    let height = (bounds.max[2] - bounds.min[2] + 1) as usize;
    let mut img = Raster::blank(width * cell, height * cell);
    for ((x, z), (_, block)) in world.surface() {
        let col = (x - bounds.min[0]) as usize;
        let row = (z - bounds.min[2]) as usize;
        img.fill_cell(row, col, cell, colour_for(block));
    }
    Ok(img)
}

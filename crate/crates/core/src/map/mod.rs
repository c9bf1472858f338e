//! Tile-map data model and the parsers for the textual formats language
//! models emit.

mod classify;
mod grid;
mod legend;
pub mod literal;
mod objective;

use thiserror::Error;

pub use classify::{classify_tiles, TileClassification, TileRole};
pub use grid::{default_fill, pad_to_rectangle, tile_frequencies, Pos, TileGrid, WalkableSet};
pub use legend::{parse_legend, valid_tile_char, TileLegend, ANTAGONIST, PROTAGONIST};
pub use objective::{Objective, ObjectiveKind, StorySpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("no fenced (```) block found")]
    NoFence,
    #[error("fenced block contains no grid rows")]
    EmptyGrid,
    #[error("no dictionary literal found")]
    NoDict,
    #[error("malformed literal: {0}")]
    Malformed(String),
    #[error("tiles '{0}' and '{1}' share a character")]
    DuplicateChar(String, String),
    #[error("legend is missing the reserved character '{0}'")]
    MissingReserved(char),
    #[error("tile '{0}' maps to more than one character")]
    MultiCharValue(String),
    #[error("tile '{0}' maps to a whitespace or control character")]
    InvalidChar(String),
    #[error("grid is not rectangular")]
    NotRectangular,
    #[error("position {0:?} lies outside the grid")]
    OutOfBounds(Pos),
    #[error("character '{0}' is not in the legend")]
    UnknownTile(char),
}

impl From<literal::LiteralError> for MapError {
    fn from(e: literal::LiteralError) -> Self {
        MapError::Malformed(e.to_string())
    }
}

const FENCE: &str = "```";

/// Extracts the grid inside the first triple-backtick fence of a response.
///
/// Text after the opening fence on the same line is an info string and is
/// ignored. Blank lines are dropped, trailing whitespace is stripped and
/// ragged rows are kept as-is for [`pad_to_rectangle`] to fix.
pub fn parse_grid(text: &str) -> Result<TileGrid, MapError> {
    let open = text.find(FENCE).ok_or(MapError::NoFence)?;
    let after_open = &text[open + FENCE.len()..];
    let close = after_open.find(FENCE).ok_or(MapError::NoFence)?;
    let body = &after_open[..close];
    // Skip the info string (`python`, `text`, …) on the fence line.
    let body = match body.find('\n') {
        Some(nl) => &body[nl + 1..],
        None => body,
    };
    let rows: Vec<&str> = body
        .lines()
        .map(str::trim_end)
        .filter(|l| !l.trim().is_empty())
        .collect();
    if rows.is_empty() {
        return Err(MapError::EmptyGrid);
    }
    Ok(TileGrid::from_lines(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_from_fence() {
        let g = parse_grid("```\nggg\ngWg\n```").unwrap();
        assert_eq!(g.row_strings(), ["ggg", "gWg"]);
        assert_eq!((g.rows(), g.cols()), (2, 3));
    }

    #[test]
    fn grid_with_surrounding_prose() {
        let g = parse_grid("story text… ``` \n@#\n``` …").unwrap();
        assert_eq!(g.row_strings(), ["@#"]);
    }

    #[test]
    fn grid_errors() {
        assert_eq!(parse_grid("no backticks here").unwrap_err(), MapError::NoFence);
        assert_eq!(parse_grid("``` only opening\nabc").unwrap_err(), MapError::NoFence);
        assert_eq!(parse_grid("```\n\n   \n```").unwrap_err(), MapError::EmptyGrid);
    }

    #[test]
    fn first_fence_wins_and_info_string_skipped() {
        let g = parse_grid("```text\nab\nc  \n```\nand\n```\nzz\n```").unwrap();
        assert_eq!(g.row_strings(), ["ab", "c"]);
    }
}

use std::collections::BTreeSet;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{MapError, Objective, Pos, TileGrid, WalkableSet};

/// Per-cell role label used by the scaling pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum TileRole {
    Walkable = 0,
    Unwalkable = 1,
    Objective = 2,
    NeedsScaling = 3,
    Scaled = 4,
}

impl TileRole {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => TileRole::Walkable,
            1 => TileRole::Unwalkable,
            2 => TileRole::Objective,
            3 => TileRole::NeedsScaling,
            4 => TileRole::Scaled,
            _ => return None,
        })
    }

    /// Footprints may not cover objective or already scaled cells.
    pub fn blocks_footprint(self) -> bool {
        matches!(self, TileRole::Objective | TileRole::Scaled)
    }
}

/// Role labels laid out like the grid they classify.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileClassification {
    rows: usize,
    cols: usize,
    labels: Vec<TileRole>,
}

impl TileClassification {
    pub fn filled(rows: usize, cols: usize, role: TileRole) -> Self {
        Self {
            rows,
            cols,
            labels: vec![role; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape_matches(&self, grid: &TileGrid) -> bool {
        grid.is_rectangular() && grid.rows() == self.rows && grid.cols() == self.cols
    }

    pub fn get(&self, (r, c): Pos) -> Option<TileRole> {
        (r < self.rows && c < self.cols).then(|| self.labels[r * self.cols + c])
    }

    pub fn set(&mut self, (r, c): Pos, role: TileRole) {
        assert!(r < self.rows && c < self.cols, "label position out of bounds");
        self.labels[r * self.cols + c] = role;
    }

    pub fn positions_with(&self, role: TileRole) -> Vec<Pos> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == role)
            .map(|(i, _)| (i / self.cols, i % self.cols))
            .collect()
    }

    pub fn row_strings(&self) -> Vec<String> {
        if self.cols == 0 {
            return vec![String::new(); self.rows];
        }
        self.labels
            .chunks(self.cols)
            .map(|row| row.iter().map(|l| char::from(b'0' + l.code())).collect())
            .collect()
    }
}

impl Serialize for TileClassification {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.row_strings().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TileClassification {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let rows = Vec::<String>::deserialize(deserializer)?;
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut labels = Vec::with_capacity(rows.len() * cols);
        for row in &rows {
            if row.len() != cols {
                return Err(D::Error::custom("ragged classification"));
            }
            for b in row.bytes() {
                let role = b
                    .checked_sub(b'0')
                    .and_then(TileRole::from_code)
                    .ok_or_else(|| D::Error::custom(format!("bad role label {:?}", b as char)))?;
                labels.push(role);
            }
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            labels,
        })
    }
}

/// Labels every cell: objective position → 2, scaling target → 3,
/// walkable → 0, anything else → 1. Label 4 is only ever written by scaling.
pub fn classify_tiles(
    grid: &TileGrid,
    walkable: &WalkableSet,
    objectives: &[Objective],
    to_scale: &BTreeSet<char>,
) -> Result<TileClassification, MapError> {
    grid.ensure_rectangular()?;
    let mut out = TileClassification::filled(grid.rows(), grid.cols(), TileRole::Unwalkable);
    for (pos, ch) in grid.cells() {
        let role = if to_scale.contains(&ch) {
            TileRole::NeedsScaling
        } else if walkable.contains(&ch) {
            TileRole::Walkable
        } else {
            TileRole::Unwalkable
        };
        out.set(pos, role);
    }
    for obj in objectives {
        if !grid.in_bounds(obj.position) {
            return Err(MapError::OutOfBounds(obj.position));
        }
        out.set(obj.position, TileRole::Objective);
    }
    Ok(out)
}

//! Tile scaling: grows selected single-cell tiles into `s × s` footprints.
//!
//! Each candidate footprint around an anchor is scored by the summed
//! original-map frequencies of the tiles it would cover, so footprints
//! preferentially swallow common filler (grass) rather than scarce tiles.
//! Footprints never cover objective cells or cells already claimed by an
//! earlier footprint.

mod template;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::{tile_frequencies, Pos, TileClassification, TileGrid, TileRole, WalkableSet, ANTAGONIST, PROTAGONIST};
use crate::pathfind::{connectivity_check, WalkMap, WalkOverrides};

pub use template::{
    stamp_structures, StampResult, StampedStructure, StructureTemplate, TemplateError, TemplateLibrary, Voxel,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalingError {
    #[error("tile '{0}' has no scaling size")]
    MissingSize(char),
    #[error("tile '{0}' has scaling size {1}; sizes must be at least 2")]
    SizeTooSmall(char, usize),
    #[error("reserved tile '{0}' cannot be scaled")]
    Reserved(char),
    #[error("classification shape does not match the grid")]
    ShapeMismatch,
}

/// Which tiles to scale and the side length of each footprint.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScalingPlan {
    to_scale: Vec<char>,
    sizes: BTreeMap<char, usize>,
}

impl ScalingPlan {
    pub fn new(to_scale: Vec<char>, sizes: BTreeMap<char, usize>) -> Result<Self, ScalingError> {
        for &ch in &to_scale {
            if ch == PROTAGONIST || ch == ANTAGONIST {
                return Err(ScalingError::Reserved(ch));
            }
            match sizes.get(&ch) {
                None => return Err(ScalingError::MissingSize(ch)),
                Some(&s) if s < 2 => return Err(ScalingError::SizeTooSmall(ch, s)),
                Some(_) => {}
            }
        }
        let mut seen = BTreeSet::new();
        let to_scale: Vec<char> = to_scale.into_iter().filter(|c| seen.insert(*c)).collect();
        let sizes = sizes.into_iter().filter(|(c, _)| seen.contains(c)).collect();
        Ok(Self { to_scale, sizes })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.to_scale.is_empty()
    }

    pub fn tiles(&self) -> &[char] {
        &self.to_scale
    }

    pub fn tile_set(&self) -> BTreeSet<char> {
        self.to_scale.iter().copied().collect()
    }

    pub fn size_of(&self, ch: char) -> Option<usize> {
        self.sizes.get(&ch).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub tile: char,
    pub top_left: Pos,
    pub size: usize,
    pub score: u64,
}

impl Placement {
    pub fn cells(&self) -> impl Iterator<Item = Pos> {
        let (r0, c0, s) = (self.top_left.0, self.top_left.1, self.size);
        (r0..r0 + s).flat_map(move |r| (c0..c0 + s).map(move |c| (r, c)))
    }

    pub fn contains(&self, (r, c): Pos) -> bool {
        r >= self.top_left.0
            && c >= self.top_left.1
            && r < self.top_left.0 + self.size
            && c < self.top_left.1 + self.size
    }
}

/// Scores the `s × s` footprint whose top-left corner is `top_left`.
///
/// Returns `None` when the footprint leaves the grid or covers an objective
/// or already scaled cell; otherwise the sum of `freqs` over covered cells.
pub fn score_candidate(
    grid: &TileGrid,
    freqs: &BTreeMap<char, usize>,
    classification: &TileClassification,
    top_left: (i64, i64),
    size: usize,
) -> Option<u64> {
    let (m, n) = top_left;
    if m < 0 || n < 0 {
        return None;
    }
    let (m, n) = (m as usize, n as usize);
    if m + size > grid.rows() || n + size > grid.cols() {
        return None;
    }
    let mut score = 0u64;
    for r in m..m + size {
        for c in n..n + size {
            let role = classification.get((r, c))?;
            if role.blocks_footprint() {
                return None;
            }
            let ch = grid.get((r, c))?;
            score += freqs.get(&ch).copied().unwrap_or(0) as u64;
        }
    }
    Some(score)
}

/// Rolls back placements that break connectivity. Off unless requested.
#[derive(Debug, Clone)]
pub struct SafeMode {
    pub walkable: WalkableSet,
    pub start: Pos,
    pub targets: Vec<Pos>,
}

#[derive(Debug, Clone, Default)]
pub struct ScalingOptions {
    pub safe_mode: Option<SafeMode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalingOutcome {
    pub grid: TileGrid,
    pub classification: TileClassification,
    pub placements: Vec<Placement>,
    /// Anchors whose best placement safe mode rolled back.
    pub rolled_back: Vec<Placement>,
}

pub fn apply_scaling(
    grid: &TileGrid,
    classification: &TileClassification,
    plan: &ScalingPlan,
) -> Result<ScalingOutcome, ScalingError> {
    apply_scaling_with(grid, classification, plan, &ScalingOptions::default())
}

/// Row-major scan over anchors labelled "needs scaling". For each anchor of
/// size `s`, every footprint containing it (top-left in
/// `[i-s+1, i] × [j-s+1, j]`) is scored; the first strictly best one wins.
/// The footprint takes the anchor's character and the "scaled" label. An
/// anchor with no valid footprint stays a single cell.
pub fn apply_scaling_with(
    grid: &TileGrid,
    classification: &TileClassification,
    plan: &ScalingPlan,
    options: &ScalingOptions,
) -> Result<ScalingOutcome, ScalingError> {
    if !classification.shape_matches(grid) {
        return Err(ScalingError::ShapeMismatch);
    }
    let freqs = tile_frequencies(grid);
    let mut grid = grid.clone();
    let mut labels = classification.clone();
    let mut placements = Vec::new();
    let mut rolled_back = Vec::new();
    let mut blocked = BTreeSet::new();

    for i in 0..grid.rows() {
        for j in 0..grid.cols() {
            let tile = grid.get((i, j)).expect("rectangular grid");
            if labels.get((i, j)) != Some(TileRole::NeedsScaling) {
                continue;
            }
            let Some(size) = plan.size_of(tile) else { continue };

            let mut best: Option<((usize, usize), u64)> = None;
            let mut best_score = 0;
            let (ii, jj, s) = (i as i64, j as i64, size as i64);
            for m in ii - s + 1..=ii {
                for n in jj - s + 1..=jj {
                    if let Some(score) = score_candidate(&grid, &freqs, &labels, (m, n), size) {
                        if score > best_score {
                            best_score = score;
                            best = Some(((m as usize, n as usize), score));
                        }
                    }
                }
            }
            let Some((top_left, score)) = best else { continue };
            let placement = Placement {
                tile,
                top_left,
                size,
                score,
            };

            if let Some(safe) = &options.safe_mode {
                if breaks_connectivity(&grid, safe, &blocked, &placement) {
                    rolled_back.push(placement);
                    continue;
                }
            }
            for cell in placement.cells() {
                grid.set(cell, tile);
                labels.set(cell, TileRole::Scaled);
                blocked.insert(cell);
            }
            placements.push(placement);
        }
    }
    Ok(ScalingOutcome {
        grid,
        classification: labels,
        placements,
        rolled_back,
    })
}

fn breaks_connectivity(grid: &TileGrid, safe: &SafeMode, blocked: &BTreeSet<Pos>, candidate: &Placement) -> bool {
    let base = WalkMap::from_grid(grid, &safe.walkable);
    let before = WalkOverrides {
        blocked: blocked.clone(),
        opened: BTreeSet::new(),
    };
    let mut after = before.clone();
    after.blocked.extend(candidate.cells());
    let was_valid = connectivity_check(&base.clone().with_overrides(&before), safe.start, &safe.targets).valid;
    was_valid && !connectivity_check(&base.with_overrides(&after), safe.start, &safe.targets).valid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{classify_tiles, Objective, ObjectiveKind};

    fn plan(sizes: &[(char, usize)]) -> ScalingPlan {
        ScalingPlan::new(sizes.iter().map(|(c, _)| *c).collect(), sizes.iter().copied().collect()).unwrap()
    }

    fn classify(grid: &TileGrid, objectives: &[Pos], plan: &ScalingPlan) -> TileClassification {
        let objs: Vec<Objective> = objectives
            .iter()
            .map(|&p| Objective::new("talk", ObjectiveKind::ChatWithNpc, 'N', p))
            .collect();
        classify_tiles(grid, &['g', 'r'].into(), &objs, &plan.tile_set()).unwrap()
    }

    #[test]
    fn score_arithmetic() {
        let g = TileGrid::from_lines(&["gggg", "gggg", "gggg", "rrrr"]);
        let freqs = tile_frequencies(&g);
        let c = classify(&g, &[], &ScalingPlan::empty());
        assert_eq!(score_candidate(&g, &freqs, &c, (0, 0), 2), Some(48));
        assert_eq!(score_candidate(&g, &freqs, &c, (2, 0), 2), Some(32));
        assert_eq!(score_candidate(&g, &freqs, &c, (3, 3), 2), None);
        assert_eq!(score_candidate(&g, &freqs, &c, (-1, 0), 2), None);

        let c = classify(&g, &[(1, 1)], &ScalingPlan::empty());
        assert_eq!(score_candidate(&g, &freqs, &c, (0, 0), 2), None);
    }

    #[test]
    fn plan_validation() {
        let sizes = BTreeMap::from([('H', 1)]);
        assert_eq!(
            ScalingPlan::new(vec!['H'], sizes).unwrap_err(),
            ScalingError::SizeTooSmall('H', 1)
        );
        assert_eq!(
            ScalingPlan::new(vec!['@'], BTreeMap::from([('@', 2)])).unwrap_err(),
            ScalingError::Reserved('@')
        );
        assert_eq!(
            ScalingPlan::new(vec!['T'], BTreeMap::new()).unwrap_err(),
            ScalingError::MissingSize('T')
        );
    }

    #[test]
    fn boxed_in_anchor_is_skipped() {
        // 'H' in the corner; every 2x2 footprint containing it touches an objective.
        let g = TileGrid::from_lines(&["Hg", "gg"]);
        let p = plan(&[('H', 2)]);
        let c = classify(&g, &[(1, 1)], &p);
        let out = apply_scaling(&g, &c, &p).unwrap();
        assert!(out.placements.is_empty());
        assert_eq!(out.grid, g);
        assert_eq!(out.classification.get((0, 0)), Some(TileRole::NeedsScaling));
    }

    #[test]
    fn ties_go_to_smallest_corner() {
        let g = TileGrid::from_lines(&["ggg", "gHg", "ggg"]);
        let p = plan(&[('H', 2)]);
        let out = apply_scaling(&g, &classify(&g, &[], &p), &p).unwrap();
        assert_eq!(out.placements.len(), 1);
        assert_eq!(out.placements[0].top_left, (0, 0));
        assert_eq!(out.placements[0].score, 8 * 3 + 1);
        assert_eq!(out.grid.row_strings(), ["HHg", "HHg", "ggg"]);
        assert_eq!(out.classification.row_strings(), ["440", "440", "000"]);
    }

    #[test]
    fn absorbed_anchor_is_not_rescaled() {
        // The only footprint for (0,0) swallows the neighbouring 'H'.
        let g = TileGrid::from_lines(&["HHg", "ggg"]);
        let p = plan(&[('H', 2)]);
        let out = apply_scaling(&g, &classify(&g, &[], &p), &p).unwrap();
        assert_eq!(out.placements.len(), 1);
        assert_eq!(out.placements[0].top_left, (0, 0));
        assert_eq!(out.classification.get((0, 1)), Some(TileRole::Scaled));
    }

    #[test]
    fn safe_mode_rolls_back_blocking_footprint() {
        // Corridor: scaling the 'H' across the only passage would cut off 'N'.
        let g = TileGrid::from_lines(&["rrrrr", "gHggN", "rrrrr"]);
        let p = plan(&[('H', 2)]);
        let c = classify(&g, &[(1, 4)], &p);
        let loose = apply_scaling(&g, &c, &p).unwrap();
        assert_eq!(loose.placements.len(), 1);

        let options = ScalingOptions {
            safe_mode: Some(SafeMode {
                walkable: ['g', 'H'].into(),
                start: (1, 0),
                targets: vec![(1, 4)],
            }),
        };
        let safe = apply_scaling_with(&g, &c, &p, &options).unwrap();
        assert!(safe.placements.is_empty());
        assert_eq!(safe.rolled_back.len(), 1);
        assert_eq!(safe.grid, g);
    }
}

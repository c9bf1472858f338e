//! Turning a parsed grid and objective dictionary into a placed, validated
//! main map.

use std::collections::BTreeSet;

use super::parse::RawObjective;
use super::PipelineError;
use crate::map::{
    default_fill, pad_to_rectangle, valid_tile_char, Objective, ObjectiveKind, Pos, TileGrid, TileLegend, WalkableSet,
    ANTAGONIST, PROTAGONIST,
};
use crate::pathfind::{astar, bfs_nearest_valid, PathQuery, PathStatus, WalkMap};
use crate::submap::place_portal;

pub const PORTAL_NAME: &str = "Portal";

/// Main map under construction: the grid plus the legend and walkable set
/// it may extend (portals, objective anchors).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldDraft {
    pub grid: TileGrid,
    pub legend: TileLegend,
    pub walkable: WalkableSet,
    pub start: Pos,
}

fn fill_char(grid: &TileGrid, legend: &TileLegend, walkable: &WalkableSet) -> char {
    let known: BTreeSet<char> = legend.chars();
    let mut only_known = grid.clone();
    for (p, ch) in grid.cells() {
        if !known.contains(&ch) {
            only_known.set(p, ' ');
        }
    }
    let usable: WalkableSet = walkable.iter().copied().filter(|c| known.contains(c)).collect();
    default_fill(&only_known, &usable)
        .filter(|c| known.contains(c))
        .or_else(|| usable.iter().next().copied())
        .or_else(|| {
            legend
                .iter()
                .map(|(_, c)| c)
                .find(|&c| c != PROTAGONIST && c != ANTAGONIST)
        })
        .unwrap_or(PROTAGONIST)
}

/// Replaces characters outside the legend with the fill tile, pads ragged
/// rows, and places the protagonist: the first `@` in the grid if any
/// (duplicates are cleared), else the walkable cell nearest the centre.
pub fn prepare_grid(raw: &TileGrid, legend: &TileLegend, walkable: &WalkableSet) -> WorldDraft {
    let fill = fill_char(raw, legend, walkable);
    let mut grid = raw.clone();
    for (p, ch) in raw.cells() {
        if !legend.contains_char(ch) {
            log::info!("replacing unknown tile '{ch}' at {p:?} with '{fill}'");
            grid.set(p, fill);
        }
    }
    let mut grid = pad_to_rectangle(&grid, fill);
    let mut heroes = grid.positions_of(PROTAGONIST).into_iter();
    let start = match heroes.next() {
        Some(first) => {
            for extra in heroes {
                grid.set(extra, fill);
            }
            first
        }
        None => {
            let centre = (grid.rows() / 2, grid.cols() / 2);
            let pos = bfs_nearest_valid(grid.rows(), grid.cols(), centre, |p| {
                grid.get(p).is_some_and(|c| walkable.contains(&c))
            })
            .unwrap_or(centre);
            grid.set(pos, PROTAGONIST);
            pos
        }
    };
    WorldDraft {
        grid,
        legend: legend.clone(),
        walkable: walkable.clone(),
        start,
    }
}

fn clamp_onto(grid: &TileGrid, row: i64, col: i64) -> Pos {
    (
        row.clamp(0, grid.rows() as i64 - 1) as usize,
        col.clamp(0, grid.cols() as i64 - 1) as usize,
    )
}

/// Resolves an objective's anchor to a legend character, registering
/// unknown but valid characters under the objective's description.
fn register_anchor(legend: &mut TileLegend, anchor: char, description: &str) -> char {
    if legend.contains_char(anchor) {
        return anchor;
    }
    let mut name = description.to_string();
    let mut n = 2;
    while legend.char_of(&name).is_some() {
        name = format!("{description} ({n})");
        n += 1;
    }
    if valid_tile_char(anchor) && legend.insert(&name, anchor).is_ok() {
        anchor
    } else {
        legend.ensure_auto(&name)
    }
}

/// Classifies and places each parsed objective on the draft.
///
/// In-place kinds land on the BFS-nearest unoccupied cell carrying their
/// anchor character (or any walkable cell when the anchor is absent from
/// the grid) and the anchor is written there. Sub-mapped kinds get a portal
/// on the nearest unoccupied walkable cell. If no objective is anchored on
/// the antagonist, the first defeat objective is re-anchored onto it.
pub fn realise_objectives(raw: &[RawObjective], draft: &mut WorldDraft) -> Result<Vec<Objective>, PipelineError> {
    if raw.is_empty() {
        return Err(PipelineError::EmptyObjectives);
    }
    let kinds: Vec<ObjectiveKind> = raw
        .iter()
        .map(|o| ObjectiveKind::from_description(&o.description))
        .collect();
    let mut anchors: Vec<char> = raw.iter().map(|o| o.anchor).collect();
    if !anchors.contains(&ANTAGONIST) {
        if let Some(i) = kinds.iter().position(|&k| k == ObjectiveKind::DefeatEnemy) {
            anchors[i] = ANTAGONIST;
        }
    }

    let mut occupied: BTreeSet<Pos> = [draft.start].into();
    let mut out = Vec::with_capacity(raw.len());
    for ((o, kind), anchor) in raw.iter().zip(kinds).zip(anchors) {
        let proposed = clamp_onto(&draft.grid, o.row, o.col);
        let (anchor, position) = if kind.is_submapped() {
            let portal = draft.legend.ensure_auto(PORTAL_NAME);
            draft.walkable.insert(portal);
            let walk = WalkMap::from_grid(&draft.grid, &draft.walkable);
            let pos = place_portal(&walk, (o.row, o.col), &occupied)
                .map_err(|_| PipelineError::Placement(format!("no portal cell for '{}'", o.description)))?;
            (portal, pos)
        } else {
            let anchor = register_anchor(&mut draft.legend, anchor, &o.description);
            let grid = &draft.grid;
            let present = grid.cells().any(|(p, c)| c == anchor && !occupied.contains(&p));
            let pos = bfs_nearest_valid(grid.rows(), grid.cols(), proposed, |p| {
                let c = grid.get(p).expect("in bounds");
                !occupied.contains(&p)
                    && if present {
                        c == anchor
                    } else {
                        draft.walkable.contains(&c)
                    }
            })
            .ok_or_else(|| PipelineError::Placement(format!("no cell for '{}'", o.description)))?;
            (anchor, pos)
        };
        draft.grid.set(position, anchor);
        occupied.insert(position);
        out.push(Objective::new(&o.description, kind, anchor, position));
    }
    Ok(out)
}

/// Per-objective result of the capped A* check from the start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectiveCheck {
    pub unreachable: Vec<usize>,
    pub capped: Vec<usize>,
}

impl ObjectiveCheck {
    pub fn is_valid(&self) -> bool {
        self.unreachable.is_empty() && self.capped.is_empty()
    }

    pub fn verdict(&self) -> String {
        if self.is_valid() {
            return "valid".to_string();
        }
        let mut parts = Vec::new();
        if !self.unreachable.is_empty() {
            parts.push(format!(
                "objectives {:?} are unreachable from the protagonist",
                self.unreachable
            ));
        }
        if !self.capped.is_empty() {
            parts.push(format!(
                "paths to objectives {:?} exceed the search budget",
                self.capped
            ));
        }
        parts.join("; ")
    }
}

pub fn check_objectives(draft: &WorldDraft, objectives: &[Objective], cap: usize) -> ObjectiveCheck {
    let walk = WalkMap::from_grid(&draft.grid, &draft.walkable);
    let mut check = ObjectiveCheck {
        unreachable: Vec::new(),
        capped: Vec::new(),
    };
    for (i, o) in objectives.iter().enumerate() {
        let query = PathQuery::new(&walk, draft.start, o.position).cap(cap).exempt_goal();
        match astar(&query).status {
            PathStatus::Found(_) => {}
            PathStatus::Unreachable => check.unreachable.push(i),
            PathStatus::IterationCapExceeded => check.capped.push(i),
        }
    }
    check
}

#[cfg(test)]
mod tests {
    use indexmap::IndexMap;

    use super::*;

    fn legend() -> TileLegend {
        let entries: IndexMap<String, char> = [
            ("Protagonist", '@'),
            ("Antagonist", '#'),
            ("Grass", 'g'),
            ("Water", 'w'),
            ("House", 'H'),
        ]
        .into_iter()
        .map(|(n, c)| (n.to_string(), c))
        .collect();
        TileLegend::new(entries).unwrap()
    }

    fn raw(description: &str, anchor: char, row: i64, col: i64) -> RawObjective {
        RawObjective {
            description: description.into(),
            anchor,
            row,
            col,
        }
    }

    #[test]
    fn prepare_replaces_pads_and_places_hero() {
        let grid = TileGrid::from_lines(&["ggw", "gz", "www"]);
        let d = prepare_grid(&grid, &legend(), &['g'].into());
        assert!(d.grid.is_rectangular());
        assert_eq!(d.start, (1, 1));
        assert_eq!(d.grid.row_strings(), ["ggw", "g@g", "www"]);
    }

    #[test]
    fn existing_hero_kept_duplicates_cleared() {
        let grid = TileGrid::from_lines(&["@g", "g@"]);
        let d = prepare_grid(&grid, &legend(), &['g'].into());
        assert_eq!(d.start, (0, 0));
        assert_eq!(d.grid.row_strings(), ["@g", "gg"]);
    }

    #[test]
    fn defeat_objective_direct() {
        let mut d = prepare_grid(&TileGrid::filled(8, 4, 'g'), &legend(), &['g'].into());
        let objs = realise_objectives(&[raw("Defeat Vorath", '#', 6, 1)], &mut d).unwrap();
        assert_eq!(objs[0].kind, ObjectiveKind::DefeatEnemy);
        assert_eq!(objs[0].position, (6, 1));
        assert_eq!(d.grid.get((6, 1)), Some('#'));
    }

    #[test]
    fn out_of_bounds_repaired_to_matching_cell() {
        let mut rows = vec!["gggggggggg".to_string(); 10];
        rows[7] = "gggggHgggg".into();
        rows[2] = "ggHggggggg".into();
        let mut d = prepare_grid(&TileGrid::from_lines(&rows), &legend(), &['g'].into());
        let objs = realise_objectives(&[raw("Meet the elder", 'H', 99, 99)], &mut d).unwrap();
        // From (9, 9): (7, 5) is 6 steps away, (2, 2) is 14.
        assert_eq!(objs[0].position, (7, 5));
    }

    #[test]
    fn antagonist_forced_and_portals_placed() {
        let grid = TileGrid::from_lines(&["gggg", "gwwg", "gggg"]);
        let mut d = prepare_grid(&grid, &legend(), &['g'].into());
        let objs = realise_objectives(
            &[raw("Slay the wyrm", 'H', 0, 0), raw("Navigate the maze", 'w', 1, 1)],
            &mut d,
        )
        .unwrap();
        assert_eq!(objs[0].anchor, '#');
        let portal = d.legend.char_of(PORTAL_NAME).unwrap();
        assert_eq!(objs[1].anchor, portal);
        assert!(d.walkable.contains(&portal));
        // (1, 1) is water; nearest walkable unoccupied in N, S, W, E order.
        assert_eq!(objs[1].position, (0, 1));
        assert!(check_objectives(&d, &objs, 1000).is_valid());
    }

    #[test]
    fn unknown_anchor_registered() {
        let mut d = prepare_grid(&TileGrid::filled(3, 3, 'g'), &legend(), &['g'].into());
        let objs = realise_objectives(&[raw("Talk to the sage", 'S', 0, 0)], &mut d).unwrap();
        assert_eq!(d.legend.name_of('S'), Some("Talk to the sage"));
        assert_eq!(objs[0].kind, ObjectiveKind::ChatWithNpc);
        assert!(matches!(
            realise_objectives(&[], &mut d),
            Err(PipelineError::EmptyObjectives)
        ));
    }

    #[test]
    fn walled_objective_is_invalid() {
        let grid = TileGrid::from_lines(&["gwg", "gwg", "gwg"]);
        let mut d = prepare_grid(&grid, &legend(), &['g'].into());
        d.grid.set(d.start, 'g');
        d.start = (1, 0);
        d.grid.set(d.start, '@');
        let objs = realise_objectives(&[raw("Talk to the sage", 'g', 1, 2)], &mut d).unwrap();
        let check = check_objectives(&d, &objs, 1000);
        assert_eq!(check.unreachable, [0]);
        assert!(check.verdict().contains("unreachable"));
    }
}

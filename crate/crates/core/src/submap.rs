//! Sub-maps for objectives that do not fit on the main map (mazes, wave
//! arenas, collection rooms) and the portals that lead to them.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::{ObjectiveKind, Pos, TileGrid, TileLegend, WalkableSet};
use crate::pathfind::{bfs_nearest_valid, connectivity_check, Flood, WalkMap};

pub const DEFAULT_SUBMAP_SIZE: usize = 15;

const WALL: char = 'W';
const FLOOR: char = '.';
const ENTRY: char = 'E';
const EXIT: char = 'X';
const ROCK: char = 'R';
const SPAWN: char = 'S';
const ITEM: char = 'I';

const MAX_ARENA_DENSITY: f64 = 0.15;
const COLLECT_PILLAR_DENSITY: f64 = 0.08;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubmapError {
    #[error("bad sub-map size: {0}")]
    BadSize(String),
    #[error("no valid portal position on the main map")]
    NotFound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    North,
    South,
    West,
    East,
}

impl Side {
    pub fn opposite(self) -> Self {
        match self {
            Side::North => Side::South,
            Side::South => Side::North,
            Side::West => Side::East,
            Side::East => Side::West,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Portal {
    pub main_map_position: Pos,
    pub submap_id: String,
    pub return_position: Pos,
}

/// What finishing a sub-map means. Consumed by whatever runtime plays it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Completion {
    ReachExit { exit: Pos },
    SurviveWaves { waves: usize, spawns: Vec<Vec<Pos>> },
    CollectAll { items: Vec<Pos> },
}

impl Completion {
    pub fn targets(&self) -> Vec<Pos> {
        match self {
            Completion::ReachExit { exit } => vec![*exit],
            Completion::SurviveWaves { spawns, .. } => {
                let set: BTreeSet<Pos> = spawns.iter().flatten().copied().collect();
                set.into_iter().collect()
            }
            Completion::CollectAll { items } => items.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubMap {
    pub id: String,
    pub kind: ObjectiveKind,
    pub grid: TileGrid,
    pub legend: TileLegend,
    pub walkable: WalkableSet,
    pub entry: Pos,
    pub completion: Completion,
}

impl SubMap {
    pub fn walk_map(&self) -> WalkMap {
        WalkMap::from_grid(&self.grid, &self.walkable)
    }

    /// Entry walkable and every completion target reachable from it.
    pub fn is_valid(&self) -> bool {
        let walk = self.walk_map();
        walk.is_passable(self.entry) && connectivity_check(&walk, self.entry, &self.completion.targets()).valid
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

fn submap_legend(extra: &[(&str, char)]) -> TileLegend {
    let entries: IndexMap<String, char> = [("Wall", WALL), ("Floor", FLOOR), ("Entry", ENTRY)]
        .iter()
        .chain(extra)
        .map(|(n, c)| (n.to_string(), *c))
        .collect();
    TileLegend::unchecked(entries).expect("static sub-map legend")
}

fn walled_room(size: usize) -> TileGrid {
    let mut grid = TileGrid::filled(size, size, FLOOR);
    for i in 0..size {
        for p in [(0, i), (size - 1, i), (i, 0), (i, size - 1)] {
            grid.set(p, WALL);
        }
    }
    grid
}

/// Picks the main-map cell for a portal: the passable, unoccupied cell
/// nearest (breadth-first) to the proposed position, clamped onto the grid.
pub fn place_portal(walk: &WalkMap, proposed: (i64, i64), occupied: &BTreeSet<Pos>) -> Result<Pos, SubmapError> {
    if walk.area() == 0 {
        return Err(SubmapError::NotFound);
    }
    let from = (
        proposed.0.clamp(0, walk.rows() as i64 - 1) as usize,
        proposed.1.clamp(0, walk.cols() as i64 - 1) as usize,
    );
    bfs_nearest_valid(walk.rows(), walk.cols(), from, |p| {
        walk.is_passable(p) && !occupied.contains(&p)
    })
    .ok_or(SubmapError::NotFound)
}

/// A perfect maze carved by seeded depth-first search over the odd lattice.
/// Entry opens on `entry_side`, the exit on the opposite side.
pub fn generate_maze(size: usize, entry_side: Side, seed: u64) -> Result<SubMap, SubmapError> {
    if size < 7 || size.is_multiple_of(2) {
        return Err(SubmapError::BadSize(format!(
            "maze size {size} must be odd and at least 7"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = TileGrid::filled(size, size, WALL);
    let rooms = (size - 1) / 2;
    let room_pos = |i: usize, j: usize| (2 * i + 1, 2 * j + 1);
    let mut visited = vec![false; rooms * rooms];
    let first = (rng.gen_range(0..rooms), rng.gen_range(0..rooms));
    visited[first.0 * rooms + first.1] = true;
    grid.set(room_pos(first.0, first.1), FLOOR);
    let mut stack = vec![first];
    while let Some(&(i, j)) = stack.last() {
        let mut options: Vec<(usize, usize)> = [
            i.checked_sub(1).map(|a| (a, j)),
            (i + 1 < rooms).then_some((i + 1, j)),
            j.checked_sub(1).map(|b| (i, b)),
            (j + 1 < rooms).then_some((i, j + 1)),
        ]
        .into_iter()
        .flatten()
        .filter(|&(a, b)| !visited[a * rooms + b])
        .collect();
        if options.is_empty() {
            stack.pop();
            continue;
        }
        options.shuffle(&mut rng);
        let (a, b) = options[0];
        visited[a * rooms + b] = true;
        let (r0, c0) = room_pos(i, j);
        let (r1, c1) = room_pos(a, b);
        grid.set(((r0 + r1) / 2, (c0 + c1) / 2), FLOOR);
        grid.set((r1, c1), FLOOR);
        stack.push((a, b));
    }

    let border = |side: Side, k: usize| -> Pos {
        let t = 2 * k + 1;
        match side {
            Side::North => (0, t),
            Side::South => (size - 1, t),
            Side::West => (t, 0),
            Side::East => (t, size - 1),
        }
    };
    let entry = border(entry_side, rng.gen_range(0..rooms));
    let exit = border(entry_side.opposite(), rng.gen_range(0..rooms));
    grid.set(entry, ENTRY);
    grid.set(exit, EXIT);

    let map = SubMap {
        id: String::new(),
        kind: ObjectiveKind::ExitMaze,
        grid,
        legend: submap_legend(&[("Exit", EXIT)]),
        walkable: [FLOOR, ENTRY, EXIT].into(),
        entry,
        completion: Completion::ReachExit { exit },
    };
    debug_assert!(map.is_valid());
    Ok(map)
}

/// Scatters `count` blockers over `candidates` in seeded order, skipping any
/// that would split the passable cells reachable from `entry`.
fn scatter_connected(
    grid: &mut TileGrid,
    walkable: &WalkableSet,
    entry: Pos,
    candidates: &mut [Pos],
    count: usize,
    blocker: char,
    rng: &mut ChaCha8Rng,
) -> usize {
    candidates.shuffle(rng);
    let mut placed = 0;
    for &p in candidates.iter() {
        if placed == count {
            break;
        }
        let before = grid.get(p).expect("candidate in bounds");
        grid.set(p, blocker);
        let walk = WalkMap::from_grid(grid, walkable);
        let passable = walk.area() - walk.impassable_count();
        if Flood::from(&walk, entry).flooded_count() == passable {
            placed += 1;
        } else {
            grid.set(p, before);
        }
    }
    placed
}

/// An open walled arena with scattered rocks (at most 15% of the interior)
/// and one set of perimeter spawn markers per wave.
pub fn generate_arena(size: usize, waves: usize, seed: u64) -> Result<SubMap, SubmapError> {
    if size < 9 {
        return Err(SubmapError::BadSize(format!("arena size {size} must be at least 9")));
    }
    if waves == 0 {
        return Err(SubmapError::BadSize("arena needs at least one wave".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = walled_room(size);
    let entry = (size - 1, size / 2);
    grid.set(entry, ENTRY);
    let walkable: WalkableSet = [FLOOR, ENTRY, SPAWN].into();

    let ring: Vec<Pos> = (1..size - 1)
        .flat_map(|r| (1..size - 1).map(move |c| (r, c)))
        .filter(|&(r, c)| r == 1 || c == 1 || r == size - 2 || c == size - 2)
        .filter(|&p| p != (size - 2, size / 2))
        .collect();
    let per_wave = 4.min(ring.len());
    let spawns: Vec<Vec<Pos>> = (0..waves)
        .map(|_| {
            let mut pick: Vec<Pos> = ring.choose_multiple(&mut rng, per_wave).copied().collect();
            pick.sort();
            pick
        })
        .collect();
    for p in spawns.iter().flatten() {
        grid.set(*p, SPAWN);
    }

    let interior = (size - 2) * (size - 2);
    let max_rocks = (MAX_ARENA_DENSITY * interior as f64).floor() as usize;
    let rocks = rng.gen_range(max_rocks / 3..=max_rocks);
    let mut candidates: Vec<Pos> = (2..size - 2)
        .flat_map(|r| (2..size - 2).map(move |c| (r, c)))
        .filter(|&p| grid.get(p) == Some(FLOOR) && p != (size - 2, size / 2))
        .collect();
    scatter_connected(&mut grid, &walkable, entry, &mut candidates, rocks, ROCK, &mut rng);

    let map = SubMap {
        id: String::new(),
        kind: ObjectiveKind::SurviveWaves,
        grid,
        legend: submap_legend(&[("Rock", ROCK), ("Spawn", SPAWN)]),
        walkable,
        entry,
        completion: Completion::SurviveWaves { waves, spawns },
    };
    debug_assert!(map.is_valid());
    Ok(map)
}

/// A walled room with a few pillars and `n_items` collectibles, all reachable
/// from the entry. Item counts beyond the free cells are clamped.
pub fn generate_collect(size: usize, n_items: usize, seed: u64) -> Result<SubMap, SubmapError> {
    if size < 7 {
        return Err(SubmapError::BadSize(format!(
            "collection room size {size} must be at least 7"
        )));
    }
    if n_items == 0 {
        return Err(SubmapError::BadSize("collection room needs at least one item".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = walled_room(size);
    let entry = (size - 1, size / 2);
    grid.set(entry, ENTRY);
    let walkable: WalkableSet = [FLOOR, ENTRY, ITEM].into();

    let interior = (size - 2) * (size - 2);
    let pillars = (COLLECT_PILLAR_DENSITY * interior as f64).floor() as usize;
    let mut candidates: Vec<Pos> = (2..size - 2).flat_map(|r| (2..size - 2).map(move |c| (r, c))).collect();
    scatter_connected(&mut grid, &walkable, entry, &mut candidates, pillars, WALL, &mut rng);

    let mut free: Vec<Pos> = grid
        .cells()
        .filter(|&(p, ch)| ch == FLOOR && p != (size - 2, size / 2))
        .map(|(p, _)| p)
        .collect();
    if n_items > free.len() {
        log::warn!("clamping {n_items} items to {} free cells", free.len());
    }
    free.shuffle(&mut rng);
    let mut items: Vec<Pos> = free.into_iter().take(n_items).collect();
    items.sort();
    for &p in &items {
        grid.set(p, ITEM);
    }

    let map = SubMap {
        id: String::new(),
        kind: ObjectiveKind::CollectItems,
        grid,
        legend: submap_legend(&[("Item", ITEM)]),
        walkable,
        entry,
        completion: Completion::CollectAll { items },
    };
    debug_assert!(map.is_valid());
    Ok(map)
}

/// Builds the sub-map for a sub-mapped objective kind; `None` for kinds
/// realised on the main map.
pub fn generate_for(
    kind: ObjectiveKind,
    size: usize,
    waves: usize,
    n_items: usize,
    seed: u64,
) -> Option<Result<SubMap, SubmapError>> {
    match kind {
        ObjectiveKind::ExitMaze => {
            let odd = if size.is_multiple_of(2) { size + 1 } else { size };
            Some(generate_maze(odd, Side::South, seed))
        }
        ObjectiveKind::SurviveWaves => Some(generate_arena(size, waves, seed)),
        ObjectiveKind::CollectItems => Some(generate_collect(size, n_items, seed)),
        ObjectiveKind::DefeatEnemy | ObjectiveKind::ChatWithNpc => None,
    }
}

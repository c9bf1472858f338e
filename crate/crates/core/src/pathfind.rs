//! 4-connected grid search: capped A*, breadth-first position repair and
//! flood-based connectivity checks.
//!
//! Steps cost 1 and the A* heuristic is Manhattan distance. Neighbours are
//! always visited in N, S, W, E order so results are reproducible.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::map::{Pos, TileGrid, WalkableSet};

/// Default A* expansion budget used when validating generated maps.
pub const DEFAULT_ITERATION_CAP: usize = 1000;

/// Passability mask over a rectangular grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkMap {
    rows: usize,
    cols: usize,
    passable: Vec<bool>,
}

/// Cells forced open or closed on top of character walkability, e.g. stamped
/// structures (closed) and their doors (open).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkOverrides {
    pub blocked: BTreeSet<Pos>,
    pub opened: BTreeSet<Pos>,
}

impl WalkOverrides {
    pub fn is_empty(&self) -> bool {
        self.blocked.is_empty() && self.opened.is_empty()
    }

    pub fn extend(&mut self, other: &WalkOverrides) {
        self.blocked.extend(other.blocked.iter().copied());
        self.opened.extend(other.opened.iter().copied());
    }
}

impl WalkMap {
    /// Marks a cell passable when its character is in `walkable`. Missing
    /// cells of a ragged grid are impassable.
    pub fn from_grid(grid: &TileGrid, walkable: &WalkableSet) -> Self {
        let (rows, cols) = (grid.rows(), grid.cols());
        let mut passable = vec![false; rows * cols];
        for ((r, c), ch) in grid.cells() {
            passable[r * cols + c] = walkable.contains(&ch);
        }
        Self { rows, cols, passable }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(Pos) -> bool) -> Self {
        let passable = (0..rows * cols).map(|i| f((i / cols, i % cols))).collect();
        Self { rows, cols, passable }
    }

    /// Applies overrides; `opened` wins over `blocked` for the same cell.
    pub fn with_overrides(mut self, overrides: &WalkOverrides) -> Self {
        for &p in &overrides.blocked {
            if self.in_bounds(p) {
                self.set(p, false);
            }
        }
        for &p in &overrides.opened {
            if self.in_bounds(p) {
                self.set(p, true);
            }
        }
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn area(&self) -> usize {
        self.rows * self.cols
    }

    pub fn in_bounds(&self, (r, c): Pos) -> bool {
        r < self.rows && c < self.cols
    }

    pub fn is_passable(&self, p: Pos) -> bool {
        self.in_bounds(p) && self.passable[self.index(p)]
    }

    pub fn set(&mut self, p: Pos, passable: bool) {
        let i = self.index(p);
        self.passable[i] = passable;
    }

    pub fn impassable_count(&self) -> usize {
        self.passable.iter().filter(|p| !**p).count()
    }

    fn index(&self, (r, c): Pos) -> usize {
        r * self.cols + c
    }

    /// In-bounds 4-neighbours in N, S, W, E order.
    pub fn neighbors(&self, (r, c): Pos) -> impl Iterator<Item = Pos> + '_ {
        neighbors4(self.rows, self.cols, (r, c))
    }
}

fn neighbors4(rows: usize, cols: usize, (r, c): Pos) -> impl Iterator<Item = Pos> {
    [
        r.checked_sub(1).map(|nr| (nr, c)),
        (r + 1 < rows).then_some((r + 1, c)),
        c.checked_sub(1).map(|nc| (r, nc)),
        (c + 1 < cols).then_some((r, c + 1)),
    ]
    .into_iter()
    .flatten()
}

#[derive(Debug, Clone, Copy)]
pub struct PathQuery<'a> {
    pub map: &'a WalkMap,
    pub start: Pos,
    pub goal: Pos,
    /// Maximum node expansions; `None` searches without a budget.
    pub max_iterations: Option<usize>,
    /// Lets the goal cell itself be impassable (an interactable anchor).
    pub goal_exempt: bool,
}

impl<'a> PathQuery<'a> {
    pub fn new(map: &'a WalkMap, start: Pos, goal: Pos) -> Self {
        Self {
            map,
            start,
            goal,
            max_iterations: Some(DEFAULT_ITERATION_CAP),
            goal_exempt: false,
        }
    }

    pub fn cap(mut self, max_iterations: usize) -> Self {
        assert!(max_iterations >= 1, "iteration cap must be positive");
        self.max_iterations = Some(max_iterations);
        self
    }

    pub fn unbounded(mut self) -> Self {
        self.max_iterations = None;
        self
    }

    pub fn exempt_goal(mut self) -> Self {
        self.goal_exempt = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathStatus {
    Found(Vec<Pos>),
    Unreachable,
    IterationCapExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathResult {
    pub status: PathStatus,
    pub expanded: usize,
}

impl PathResult {
    pub fn path(&self) -> Option<&[Pos]> {
        match &self.status {
            PathStatus::Found(p) => Some(p),
            _ => None,
        }
    }

    /// Number of steps (edges) of a found path.
    pub fn steps(&self) -> Option<usize> {
        self.path().map(|p| p.len() - 1)
    }
}

fn manhattan(a: Pos, b: Pos) -> usize {
    a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
}

/// A* from `start` to `goal`. An expansion is one pop of a node from the open
/// set; exceeding the cap yields [`PathStatus::IterationCapExceeded`].
pub fn astar(query: &PathQuery<'_>) -> PathResult {
    let map = query.map;
    let (start, goal) = (query.start, query.goal);
    if !map.in_bounds(start) || !map.in_bounds(goal) {
        return PathResult {
            status: PathStatus::Unreachable,
            expanded: 0,
        };
    }
    let n = map.area();
    let mut g = vec![usize::MAX; n];
    let mut parent: Vec<Option<Pos>> = vec![None; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let mut seq = 0usize;
    g[map.index(start)] = 0;
    open.push(Reverse((manhattan(start, goal), manhattan(start, goal), seq, start)));

    let mut expanded = 0;
    while let Some(Reverse((_, _, _, pos))) = open.pop() {
        let idx = map.index(pos);
        if closed[idx] {
            continue;
        }
        expanded += 1;
        if query.max_iterations.is_some_and(|cap| expanded > cap) {
            return PathResult {
                status: PathStatus::IterationCapExceeded,
                expanded: expanded - 1,
            };
        }
        closed[idx] = true;
        if pos == goal {
            let mut path = vec![pos];
            let mut cur = pos;
            while let Some(prev) = parent[map.index(cur)] {
                path.push(prev);
                cur = prev;
            }
            path.reverse();
            return PathResult {
                status: PathStatus::Found(path),
                expanded,
            };
        }
        for next in map.neighbors(pos) {
            let passable = map.is_passable(next) || (query.goal_exempt && next == goal);
            let ni = map.index(next);
            if !passable || closed[ni] {
                continue;
            }
            let cost = g[idx] + 1;
            if cost < g[ni] {
                g[ni] = cost;
                parent[ni] = Some(pos);
                seq += 1;
                let h = manhattan(next, goal);
                open.push(Reverse((cost + h, h, seq, next)));
            }
        }
    }
    PathResult {
        status: PathStatus::Unreachable,
        expanded,
    }
}

/// Breadth-first search over every cell (walkability ignored) for the
/// accepted cell closest to `from`. Equal depths resolve by N, S, W, E
/// enqueue order.
pub fn bfs_nearest_valid(rows: usize, cols: usize, from: Pos, mut accept: impl FnMut(Pos) -> bool) -> Option<Pos> {
    if from.0 >= rows || from.1 >= cols {
        return None;
    }
    let mut seen = vec![false; rows * cols];
    let mut queue = VecDeque::from([from]);
    seen[from.0 * cols + from.1] = true;
    while let Some(pos) = queue.pop_front() {
        if accept(pos) {
            return Some(pos);
        }
        for next in neighbors4(rows, cols, pos) {
            let i = next.0 * cols + next.1;
            if !seen[i] {
                seen[i] = true;
                queue.push_back(next);
            }
        }
    }
    None
}

/// Breadth-first distances from a start cell over passable cells. The start
/// is always entered even when its own cell is impassable.
#[derive(Debug, Clone)]
pub struct Flood {
    rows: usize,
    cols: usize,
    dist: Vec<Option<usize>>,
}

impl Flood {
    pub fn from(map: &WalkMap, start: Pos) -> Self {
        let mut dist = vec![None; map.area()];
        if map.in_bounds(start) {
            dist[map.index(start)] = Some(0);
            let mut queue = VecDeque::from([start]);
            while let Some(pos) = queue.pop_front() {
                let d = dist[map.index(pos)].expect("queued cells have distances");
                for next in map.neighbors(pos) {
                    let ni = map.index(next);
                    if dist[ni].is_none() && map.is_passable(next) {
                        dist[ni] = Some(d + 1);
                        queue.push_back(next);
                    }
                }
            }
        }
        Self {
            rows: map.rows(),
            cols: map.cols(),
            dist,
        }
    }

    pub fn distance(&self, (r, c): Pos) -> Option<usize> {
        if r < self.rows && c < self.cols {
            self.dist[r * self.cols + c]
        } else {
            None
        }
    }

    pub fn is_flooded(&self, p: Pos) -> bool {
        self.distance(p).is_some()
    }

    /// Steps needed to reach `target`, which counts as reached when it is
    /// flooded itself or stepped onto from a flooded 4-neighbour.
    pub fn distance_to_target(&self, target: Pos) -> Option<usize> {
        let direct = self.distance(target);
        let via_neighbor = neighbors4(self.rows, self.cols, target)
            .filter_map(|n| self.distance(n))
            .min()
            .map(|d| d + 1);
        match (direct, via_neighbor) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn reaches(&self, target: Pos) -> bool {
        self.distance_to_target(target).is_some()
    }

    pub fn flooded_count(&self) -> usize {
        self.dist.iter().filter(|d| d.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connectivity {
    pub reachable: Vec<bool>,
    pub valid: bool,
}

/// One flood from `start`; every target must be flooded or touch a flooded
/// cell.
pub fn connectivity_check(map: &WalkMap, start: Pos, targets: &[Pos]) -> Connectivity {
    let flood = Flood::from(map, start);
    let reachable: Vec<bool> = targets.iter().map(|&t| flood.reaches(t)).collect();
    let valid = reachable.iter().all(|r| *r);
    Connectivity { reachable, valid }
}

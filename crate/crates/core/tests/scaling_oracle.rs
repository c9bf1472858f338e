use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use storyforge::map::{classify_tiles, Objective, ObjectiveKind, Pos, TileGrid, TileRole, WalkableSet};
use storyforge::scaling::{apply_scaling, ScalingPlan};

const N: usize = 12;

struct Case {
    grid: TileGrid,
    walkable: WalkableSet,
    objectives: Vec<Pos>,
    plan: ScalingPlan,
}

fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ground = ['g', 'g', 'g', 'g', 'd', 'd', 'T', 'w', 'R'];
    let mut rows: Vec<Vec<char>> = (0..N)
        .map(|_| (0..N).map(|_| *ground.choose(&mut rng).unwrap()).collect())
        .collect();
    let mut cells: Vec<Pos> = (0..N).flat_map(|r| (0..N).map(move |c| (r, c))).collect();
    cells.shuffle(&mut rng);
    let n_anchors = rng.gen_range(2..=4);
    let anchor_tiles = ['H', 'K'];
    for &(r, c) in &cells[..n_anchors] {
        rows[r][c] = anchor_tiles[rng.gen_range(0..2)];
    }
    let n_objectives = rng.gen_range(1..=3);
    let objectives: Vec<Pos> = cells[n_anchors..n_anchors + n_objectives].to_vec();
    for &(r, c) in &objectives {
        rows[r][c] = 'O';
    }
    let sizes: BTreeMap<char, usize> = [('H', rng.gen_range(2..=4)), ('K', rng.gen_range(2..=3))].into();
    Case {
        grid: TileGrid::new(rows),
        walkable: ['g', 'd'].into(),
        objectives,
        plan: ScalingPlan::new(vec!['H', 'K'], sizes).unwrap(),
    }
}

/// Independent sequential search: for every anchor in row-major order, try
/// every top-left corner on the grid whose square holds the anchor, in
/// row-major order, and keep the first strictly highest score.
fn oracle(case: &Case) -> Vec<(char, Pos, usize, u64)> {
    let g = &case.grid;
    let mut counts: BTreeMap<char, u64> = BTreeMap::new();
    for r in 0..N {
        for c in 0..N {
            *counts.entry(g.get((r, c)).unwrap()).or_default() += 1;
        }
    }
    let mut label: Vec<Vec<u8>> = (0..N)
        .map(|r| {
            (0..N)
                .map(|c| {
                    let ch = g.get((r, c)).unwrap();
                    if case.plan.size_of(ch).is_some() {
                        3
                    } else if case.walkable.contains(&ch) {
                        0
                    } else {
                        1
                    }
                })
                .collect()
        })
        .collect();
    for &(r, c) in &case.objectives {
        label[r][c] = 2;
    }

    let mut out = Vec::new();
    for i in 0..N {
        for j in 0..N {
            if label[i][j] != 3 {
                continue;
            }
            let tile = g.get((i, j)).unwrap();
            let s = case.plan.size_of(tile).unwrap();
            let mut best: Option<(Pos, u64)> = None;
            for m in 0..N {
                for n in 0..N {
                    let holds = m <= i && i < m + s && n <= j && j < n + s;
                    if !holds || m + s > N || n + s > N {
                        continue;
                    }
                    let mut score = 0;
                    let mut ok = true;
                    for r in m..m + s {
                        for c in n..n + s {
                            if label[r][c] == 2 || label[r][c] == 4 {
                                ok = false;
                            }
                            score += counts[&g.get((r, c)).unwrap()];
                        }
                    }
                    if ok && best.is_none_or(|(_, b)| score > b) {
                        best = Some(((m, n), score));
                    }
                }
            }
            if let Some(((m, n), score)) = best {
                for row in label.iter_mut().skip(m).take(s) {
                    for l in row.iter_mut().skip(n).take(s) {
                        *l = 4;
                    }
                }
                out.push((tile, (m, n), s, score));
            }
        }
    }
    out
}

fn run(case: &Case) -> storyforge::scaling::ScalingOutcome {
    let objectives: Vec<Objective> = case
        .objectives
        .iter()
        .map(|&p| Objective::new("o", ObjectiveKind::ChatWithNpc, 'O', p))
        .collect();
    let labels = classify_tiles(&case.grid, &case.walkable, &objectives, &case.plan.tile_set()).unwrap();
    apply_scaling(&case.grid, &labels, &case.plan).unwrap()
}

fn check_invariants(case: &Case, outcome: &storyforge::scaling::ScalingOutcome) {
    let mut covered = BTreeSet::new();
    for p in &outcome.placements {
        for cell in p.cells() {
            assert!(covered.insert(cell), "footprints overlap at {cell:?}");
            assert!(!case.objectives.contains(&cell), "footprint covers objective {cell:?}");
            assert_eq!(outcome.grid.get(cell), Some(p.tile));
            assert_eq!(outcome.classification.get(cell), Some(TileRole::Scaled));
        }
    }
    for &o in &case.objectives {
        assert_eq!(outcome.classification.get(o), Some(TileRole::Objective));
        assert_eq!(outcome.grid.get(o), case.grid.get(o));
    }
    for (pos, ch) in case.grid.cells() {
        if !covered.contains(&pos) {
            assert_eq!(outcome.grid.get(pos), Some(ch));
        }
    }
}

#[test]
fn placements_match_exhaustive_oracle() {
    let mut placed = 0;
    for seed in 0..80 {
        let case = random_case(seed);
        let outcome = run(&case);
        let got: Vec<_> = outcome
            .placements
            .iter()
            .map(|p| (p.tile, p.top_left, p.size, p.score))
            .collect();
        assert_eq!(got, oracle(&case), "seed {seed}");
        check_invariants(&case, &outcome);
        placed += got.len();
    }
    assert!(placed >= 100);
}

#[test]
fn crowded_anchor_keeps_single_cell() {
    let grid = TileGrid::from_lines(&["OHO", "OOO"]);
    let objectives: Vec<Objective> = grid
        .positions_of('O')
        .into_iter()
        .map(|p| Objective::new("o", ObjectiveKind::ChatWithNpc, 'O', p))
        .collect();
    let plan = ScalingPlan::new(vec!['H'], [('H', 2)].into()).unwrap();
    let labels = classify_tiles(&grid, &WalkableSet::new(), &objectives, &plan.tile_set()).unwrap();
    let outcome = apply_scaling(&grid, &labels, &plan).unwrap();
    assert!(outcome.placements.is_empty());
    assert_eq!(outcome.grid, grid);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scaling_invariants(seed in any::<u64>()) {
        let case = random_case(seed);
        let outcome = run(&case);
        check_invariants(&case, &outcome);
        prop_assert!(outcome.placements.len() <= 4);
    }
}

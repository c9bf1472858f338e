//! Genetic-algorithm baseline that evolves small walkable/unwalkable maps to
//! maximise the average shortest path from the start to the objectives.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::{Pos, TileGrid, TileLegend, WalkableSet, ANTAGONIST, PROTAGONIST};
use crate::pathfind::{bfs_nearest_valid, Flood, WalkMap};

pub const FLOOR: char = 'g';
pub const WALL: char = 'W';
pub const OBJECTIVE: char = 'O';

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvoError {
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvoConfig {
    pub size: usize,
    pub population_size: usize,
    pub generations: usize,
    /// Per-cell flip probability.
    pub mutation_rate: f64,
    pub tournament_size: usize,
    pub elitism_count: usize,
    pub rng_seed: u64,
    pub n_objectives: usize,
    /// Wall density of the random initial population.
    pub initial_wall_density: f64,
    /// Probability that each special position (start, objective) is moved.
    pub position_mutation_rate: f64,
}

impl Default for EvoConfig {
    fn default() -> Self {
        Self {
            size: 15,
            population_size: 50,
            generations: 200,
            mutation_rate: 0.02,
            tournament_size: 3,
            elitism_count: 2,
            rng_seed: 1,
            n_objectives: 8,
            initial_wall_density: 0.3,
            position_mutation_rate: 0.1,
        }
    }
}

impl EvoConfig {
    pub fn validate(&self) -> Result<(), EvoError> {
        let bad = |m: &str| Err(EvoError::InvalidConfig(m.to_string()));
        if self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if self.elitism_count >= self.population_size {
            return bad("elitism_count must be below population_size");
        }
        if !(self.mutation_rate > 0.0 && self.mutation_rate < 1.0) {
            return bad("mutation_rate must lie in (0, 1)");
        }
        if self.tournament_size == 0 {
            return bad("tournament_size must be positive");
        }
        if self.n_objectives == 0 {
            return bad("n_objectives must be positive");
        }
        if self.size < 2 || self.size * self.size < self.n_objectives + 1 {
            return bad("grid too small for start and objectives");
        }
        if !(0.0..1.0).contains(&self.initial_wall_density) {
            return bad("initial_wall_density must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.position_mutation_rate) {
            return bad("position_mutation_rate must lie in [0, 1]");
        }
        Ok(())
    }
}

/// A candidate map: wall bits plus start and objective positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Genome {
    pub size: usize,
    /// Row-major; `true` means the cell is floor.
    pub floor: Vec<bool>,
    pub start: Pos,
    pub objectives: Vec<Pos>,
}

impl Genome {
    fn random(config: &EvoConfig, rng: &mut impl Rng) -> Self {
        let size = config.size;
        let floor = (0..size * size)
            .map(|_| !rng.gen_bool(config.initial_wall_density))
            .collect();
        let mut cells: Vec<Pos> = (0..size).flat_map(|r| (0..size).map(move |c| (r, c))).collect();
        cells.shuffle(rng);
        Self {
            size,
            floor,
            start: cells[0],
            objectives: cells[1..=config.n_objectives].to_vec(),
        }
    }

    /// Walkability as the rendered map sees it: floor cells minus objective
    /// anchors. The start is always enterable.
    pub fn walk_map(&self) -> WalkMap {
        let anchors: BTreeSet<Pos> = self.objectives.iter().copied().collect();
        WalkMap::from_fn(self.size, self.size, |(r, c)| {
            self.floor[r * self.size + c] && !anchors.contains(&(r, c))
        })
    }

    /// Checks distinctness and bounds of the special positions.
    pub fn is_well_formed(&self, n_objectives: usize) -> bool {
        let mut seen = BTreeSet::new();
        self.objectives.len() == n_objectives
            && self.floor.len() == self.size * self.size
            && std::iter::once(&self.start)
                .chain(&self.objectives)
                .all(|&(r, c)| r < self.size && c < self.size && seen.insert((r, c)))
    }

    /// Renders the level text format. The first objective is the antagonist.
    pub fn to_grid(&self) -> TileGrid {
        let mut grid = TileGrid::new(
            self.floor
                .chunks(self.size)
                .map(|row| row.iter().map(|&f| if f { FLOOR } else { WALL }).collect())
                .collect(),
        );
        grid.set(self.start, PROTAGONIST);
        for (i, &o) in self.objectives.iter().enumerate() {
            grid.set(o, if i == 0 { ANTAGONIST } else { OBJECTIVE });
        }
        grid
    }

    fn repair(&mut self) {
        let size = self.size;
        let mut taken = BTreeSet::new();
        let specials: Vec<Pos> = std::iter::once(self.start)
            .chain(self.objectives.iter().copied())
            .collect();
        let mut fixed = Vec::with_capacity(specials.len());
        for p in specials {
            let p = (p.0.min(size - 1), p.1.min(size - 1));
            let p = if taken.contains(&p) {
                bfs_nearest_valid(size, size, p, |q| !taken.contains(&q)).expect("grid has free cells")
            } else {
                p
            };
            taken.insert(p);
            fixed.push(p);
        }
        self.start = fixed[0];
        self.objectives = fixed[1..].to_vec();
    }
}

pub fn evo_legend() -> TileLegend {
    let entries: IndexMap<String, char> = [
        ("Grass", FLOOR),
        ("Wall", WALL),
        ("Protagonist", PROTAGONIST),
        ("Antagonist", ANTAGONIST),
        ("Objective", OBJECTIVE),
    ]
    .into_iter()
    .map(|(n, c)| (n.to_string(), c))
    .collect();
    TileLegend::new(entries).expect("static legend is valid")
}

pub fn evo_walkable() -> WalkableSet {
    [FLOOR].into()
}

/// ASPAO when every objective is reachable; otherwise the mean over reachable
/// objectives minus `area` per unreachable one, which ranks every invalid
/// genome below every valid one.
pub fn fitness(genome: &Genome) -> f64 {
    let flood = Flood::from(&genome.walk_map(), genome.start);
    let area = (genome.size * genome.size) as f64;
    let dists: Vec<Option<usize>> = genome.objectives.iter().map(|&o| flood.distance_to_target(o)).collect();
    let reached: Vec<usize> = dists.iter().flatten().copied().collect();
    let missing = dists.len() - reached.len();
    let mean = if reached.is_empty() {
        0.0
    } else {
        reached.iter().sum::<usize>() as f64 / reached.len() as f64
    };
    mean - area * missing as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvoRun {
    pub best: Genome,
    pub best_fitness: f64,
    pub log: Vec<GenerationStats>,
}

impl EvoRun {
    pub fn is_valid(&self) -> bool {
        self.best_fitness >= 0.0
    }
}

fn evaluate(population: &[Genome]) -> Vec<f64> {
    // Parallel map keeps input order, so results never depend on scheduling.
    population.par_iter().map(fitness).collect()
}

/// Ranks indices best-first; ties keep population order.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

fn stats(generation: usize, scores: &[f64]) -> GenerationStats {
    GenerationStats {
        generation,
        best: scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: scores.iter().sum::<f64>() / scores.len() as f64,
    }
}

fn tournament<'a>(pop: &'a [Genome], scores: &[f64], k: usize, rng: &mut impl Rng) -> &'a Genome {
    let mut best = rng.gen_range(0..pop.len());
    for _ in 1..k {
        let i = rng.gen_range(0..pop.len());
        if scores[i] > scores[best] {
            best = i;
        }
    }
    &pop[best]
}

fn crossover(a: &Genome, b: &Genome, rng: &mut impl Rng) -> Genome {
    let floor = a
        .floor
        .iter()
        .zip(&b.floor)
        .map(|(&x, &y)| if rng.gen_bool(0.5) { x } else { y })
        .collect();
    let start = if rng.gen_bool(0.5) { a.start } else { b.start };
    let objectives = a
        .objectives
        .iter()
        .zip(&b.objectives)
        .map(|(&x, &y)| if rng.gen_bool(0.5) { x } else { y })
        .collect();
    Genome {
        size: a.size,
        floor,
        start,
        objectives,
    }
}

fn mutate(g: &mut Genome, config: &EvoConfig, rng: &mut impl Rng) {
    for cell in g.floor.iter_mut() {
        if rng.gen_bool(config.mutation_rate) {
            *cell = !*cell;
        }
    }
    let size = g.size;
    let rate = config.position_mutation_rate;
    nudge(&mut g.start, size, rate, rng);
    for o in g.objectives.iter_mut() {
        nudge(o, size, rate, rng);
    }
}

/// With probability `rate`, moves a position one step or to a random cell.
fn nudge(p: &mut Pos, size: usize, rate: f64, rng: &mut impl Rng) {
    if !rng.gen_bool(rate) {
        return;
    }
    *p = if rng.gen_bool(0.5) {
        let (dr, dc) = [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)][rng.gen_range(0..4)];
        (
            (p.0 as i64 + dr).clamp(0, size as i64 - 1) as usize,
            (p.1 as i64 + dc).clamp(0, size as i64 - 1) as usize,
        )
    } else {
        (rng.gen_range(0..size), rng.gen_range(0..size))
    };
}

/// Seeded generational GA with tournament selection, uniform crossover,
/// per-cell flip mutation, position repair and elitism.
pub fn evolve(config: &EvoConfig) -> Result<EvoRun, EvoError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut population: Vec<Genome> = (0..config.population_size)
        .map(|_| {
            let mut g = Genome::random(config, &mut rng);
            g.repair();
            g
        })
        .collect();
    let mut scores = evaluate(&population);
    let mut log = vec![stats(0, &scores)];

    for generation in 1..=config.generations {
        let order = ranking(&scores);
        let mut next: Vec<Genome> = order[..config.elitism_count]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        while next.len() < config.population_size {
            let a = tournament(&population, &scores, config.tournament_size, &mut rng);
            let b = tournament(&population, &scores, config.tournament_size, &mut rng);
            let mut child = crossover(a, b, &mut rng);
            mutate(&mut child, config, &mut rng);
            child.repair();
            debug_assert!(child.is_well_formed(config.n_objectives));
            next.push(child);
        }
        population = next;
        scores = evaluate(&population);
        log.push(stats(generation, &scores));
    }

    let best_idx = ranking(&scores)[0];
    Ok(EvoRun {
        best: population[best_idx].clone(),
        best_fitness: scores[best_idx],
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_genome() -> Genome {
        Genome {
            size: 5,
            floor: vec![true; 25],
            start: (2, 2),
            objectives: vec![(1, 2), (3, 2), (2, 1), (2, 3)],
        }
    }

    #[test]
    fn ring_at_distance_one() {
        assert_eq!(fitness(&open_genome()), 1.0);
    }

    #[test]
    fn walled_objective_is_penalised_below_any_valid_score() {
        let mut g = open_genome();
        g.objectives[0] = (0, 0);
        for p in [(0, 1), (1, 0), (1, 1)] {
            g.floor[p.0 * 5 + p.1] = false;
        }
        // Remaining three sit at distance 1; one miss costs the grid area.
        assert_eq!(fitness(&g), 1.0 - 25.0);
    }

    #[test]
    fn zero_generations_returns_best_initial() {
        let config = EvoConfig {
            generations: 0,
            population_size: 10,
            ..EvoConfig::default()
        };
        let run = evolve(&config).unwrap();
        assert_eq!(run.log.len(), 1);
        assert_eq!(run.best_fitness, run.log[0].best);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let config = EvoConfig {
            generations: 15,
            population_size: 12,
            rng_seed: 9,
            ..EvoConfig::default()
        };
        assert_eq!(evolve(&config).unwrap(), evolve(&config).unwrap());
    }

    #[test]
    fn best_is_monotone_and_genomes_stay_well_formed() {
        let config = EvoConfig {
            generations: 30,
            population_size: 16,
            rng_seed: 4,
            ..EvoConfig::default()
        };
        let run = evolve(&config).unwrap();
        assert!(run.log.windows(2).all(|w| w[1].best >= w[0].best));
        assert!(run.best.is_well_formed(config.n_objectives));
    }

    #[test]
    fn config_validation() {
        let bad = [
            EvoConfig {
                population_size: 1,
                ..EvoConfig::default()
            },
            EvoConfig {
                elitism_count: 50,
                ..EvoConfig::default()
            },
            EvoConfig {
                mutation_rate: 0.0,
                ..EvoConfig::default()
            },
            EvoConfig {
                size: 2,
                n_objectives: 8,
                ..EvoConfig::default()
            },
        ];
        for c in bad {
            assert!(evolve(&c).is_err());
        }
    }

    #[test]
    fn grid_rendering() {
        let g = open_genome().to_grid();
        assert_eq!(g.get((2, 2)), Some('@'));
        assert_eq!(g.get((1, 2)), Some('#'));
        assert_eq!(g.get((3, 2)), Some('O'));
        assert!(evo_legend().chars().is_superset(&g.charset()));
    }
}

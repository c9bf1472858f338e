//! Level-quality metrics: tile diversity (Shannon entropy), unwalkable-tile
//! ratios, playability, average shortest path to objectives and the
//! weighted-vote composite score.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::{tile_frequencies, Pos, TileGrid, WalkableSet};
use crate::pathfind::{connectivity_check, Flood, WalkMap};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("grid is empty")]
    EmptyGrid,
    #[error("corpus contains no maps")]
    EmptyCorpus,
    #[error("no votes were cast")]
    NoVotes,
    #[error("{votes} vote counts but {weights} weights")]
    LengthMismatch { votes: usize, weights: usize },
}

/// `H = -Σ p_i log2 p_i` over the distinct characters of the grid.
pub fn shannon_entropy(grid: &TileGrid) -> Result<f64, MetricError> {
    let area = grid.area();
    if area == 0 {
        return Err(MetricError::EmptyGrid);
    }
    let total = area as f64;
    let h = tile_frequencies(grid)
        .values()
        .map(|&n| {
            let p = n as f64 / total;
            -p * p.log2()
        })
        .sum::<f64>();
    // -0.0 for a single tile type
    Ok(h.max(0.0))
}

pub fn tile_type_count(grid: &TileGrid) -> usize {
    tile_frequencies(grid).len()
}

/// Fraction of cells whose character is not walkable.
pub fn unwalkable_ratio(grid: &TileGrid, walkable: &WalkableSet) -> Result<f64, MetricError> {
    let area = grid.area();
    if area == 0 {
        return Err(MetricError::EmptyGrid);
    }
    let blocked = grid.cells().filter(|(_, c)| !walkable.contains(c)).count();
    Ok(blocked as f64 / area as f64)
}

/// Mean number of steps from `start` to each objective (reached by standing
/// on it or next to it). `None` when any objective is unreachable or the
/// list is empty.
pub fn aspao(map: &WalkMap, start: Pos, objectives: &[Pos]) -> Option<f64> {
    if objectives.is_empty() {
        return None;
    }
    let flood = Flood::from(map, start);
    let mut total = 0usize;
    for &o in objectives {
        total += flood.distance_to_target(o)?;
    }
    Some(total as f64 / objectives.len() as f64)
}

pub fn aspao_on_grid(grid: &TileGrid, walkable: &WalkableSet, start: Pos, objectives: &[Pos]) -> Option<f64> {
    aspao(&WalkMap::from_grid(grid, walkable), start, objectives)
}

/// Cosine similarity `<a, b> / (|a| |b|)`. `None` for mismatched lengths or
/// a zero vector.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.is_empty() {
        return None;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Rank weights `w_i = k - i` for ranks `i = 1..=k`.
pub fn rank_weights(k: usize) -> Vec<f64> {
    (1..=k).map(|i| (k - i) as f64).collect()
}

/// Weighted average of per-rank vote counts: `Σ w_i R_i / Σ R_i`.
pub fn composite_score(votes: &[u64], weights: &[f64]) -> Result<f64, MetricError> {
    if votes.len() != weights.len() {
        return Err(MetricError::LengthMismatch {
            votes: votes.len(),
            weights: weights.len(),
        });
    }
    let total: u64 = votes.iter().sum();
    if total == 0 {
        return Err(MetricError::NoVotes);
    }
    let weighted: f64 = votes.iter().zip(weights).map(|(&r, w)| r as f64 * w).sum();
    Ok(weighted / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEvaluation {
    pub map_id: String,
    pub area: usize,
    pub unwalkable_area: usize,
    pub valid: bool,
    pub utr: f64,
    pub vutr_numerator: usize,
    pub entropy: f64,
    pub tile_type_count: usize,
    pub aspao: Option<f64>,
}

impl MapEvaluation {
    pub fn vutr(&self) -> f64 {
        self.vutr_numerator as f64 / self.area as f64
    }
}

/// Evaluates one map. `walk` carries walkability including any structure
/// overrides; its impassable cells are the unwalkable area.
pub fn evaluate_map(
    map_id: impl Into<String>,
    grid: &TileGrid,
    walk: &WalkMap,
    start: Pos,
    objectives: &[Pos],
) -> Result<MapEvaluation, MetricError> {
    let area = grid.area();
    if area == 0 {
        return Err(MetricError::EmptyGrid);
    }
    let unwalkable_area = walk.impassable_count();
    let valid = connectivity_check(walk, start, objectives).valid;
    Ok(MapEvaluation {
        map_id: map_id.into(),
        area,
        unwalkable_area,
        valid,
        utr: unwalkable_area as f64 / area as f64,
        vutr_numerator: if valid { unwalkable_area } else { 0 },
        entropy: shannon_entropy(grid)?,
        tile_type_count: tile_type_count(grid),
        aspao: if valid { aspao(walk, start, objectives) } else { None },
    })
}

/// `Σ C_m U_m / Σ A_m` over the corpus.
pub fn corpus_vutr(evaluations: &[MapEvaluation]) -> Result<f64, MetricError> {
    if evaluations.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let num: usize = evaluations.iter().map(|e| e.vutr_numerator).sum();
    let den: usize = evaluations.iter().map(|e| e.area).sum();
    Ok(num as f64 / den as f64)
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            mean,
            std: var.sqrt(),
            n: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub maps: Vec<MapEvaluation>,
    pub tile_types: Stat,
    pub entropy: Stat,
    pub playability: Stat,
    pub utr: Stat,
    /// Per-map `C_m U_m / A_m`.
    pub vutr: Stat,
    /// Over valid maps only; `None` when no map is valid.
    pub aspao: Option<Stat>,
    /// Area-weighted `Σ C_m U_m / Σ A_m`.
    pub corpus_vutr: f64,
    /// Unnormalised `Σ U_m / A_m`, kept for debugging.
    pub utr_ratio_sum: f64,
}

impl CorpusReport {
    pub fn from_evaluations(maps: Vec<MapEvaluation>) -> Result<Self, MetricError> {
        let corpus_vutr = corpus_vutr(&maps)?;
        let collect = |f: &dyn Fn(&MapEvaluation) -> f64| -> Vec<f64> { maps.iter().map(f).collect() };
        let stat = |v: Vec<f64>| Stat::of(&v).expect("non-empty corpus");
        let utrs = collect(&|e| e.utr);
        let aspaos: Vec<f64> = maps.iter().filter_map(|e| e.aspao).collect();
        Ok(Self {
            tile_types: stat(collect(&|e| e.tile_type_count as f64)),
            entropy: stat(collect(&|e| e.entropy)),
            playability: stat(collect(&|e| if e.valid { 1.0 } else { 0.0 })),
            utr_ratio_sum: utrs.iter().sum(),
            utr: stat(utrs),
            vutr: stat(collect(&|e| e.vutr())),
            aspao: Stat::of(&aspaos),
            corpus_vutr,
            maps,
        })
    }

    /// Aligned text table in "mean ± std" form.
    pub fn to_table(&self) -> String {
        let fmt = |s: &Stat| format!("{:.2} ± {:.2}", s.mean, s.std);
        let rows: Vec<(&str, String)> = vec![
            ("Tile Type Number", fmt(&self.tile_types)),
            ("Shannon Entropy", fmt(&self.entropy)),
            ("Playability", fmt(&self.playability)),
            ("UTR", fmt(&self.utr)),
            ("VUTR", fmt(&self.vutr)),
            ("VUTR (corpus)", format!("{:.2}", self.corpus_vutr)),
            (
                "ASPAO",
                self.aspao.as_ref().map(fmt).unwrap_or_else(|| "undefined".into()),
            ),
        ];
        let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
        let mut out = format!("{:<width$}  {} (n = {})\n", "Metric", "Value", self.maps.len());
        for (k, v) in rows {
            out.push_str(&format!("{k:<width$}  {v}\n"));
        }
        out
    }
}

//! End-to-end acceptance checks. Each criterion prints one PASS or FAIL line
//! straight to stdout, then the test fails if any criterion did.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use storyforge::export::{export_block_json, import_block_json, LevelBundle};
use storyforge::map::{classify_tiles, Objective, ObjectiveKind, Pos, TileGrid, WalkableSet, ANTAGONIST, PROTAGONIST};
use storyforge::metrics::{composite_score, corpus_vutr, cosine_similarity, evaluate_map, rank_weights};
use storyforge::pathfind::{astar, connectivity_check, PathQuery, PathStatus, WalkMap};
use storyforge::scaling::{apply_scaling, ScalingPlan};
use tempfile::TempDir;

type Outcome = Result<String, String>;
type Check<'a> = Box<dyn FnOnce() -> Outcome + 'a>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn root(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn storyforge(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_storyforge"))
        .args(args)
        .env_remove("STORYFORGE_API_KEY")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!(
            "storyforge {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr).trim()
        )
    })
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn bytes(path: &Path) -> Result<Vec<u8>, String> {
    fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn neighbours((r, c): Pos, rows: usize, cols: usize) -> impl Iterator<Item = Pos> {
    [(r.wrapping_sub(1), c), (r + 1, c), (r, c.wrapping_sub(1)), (r, c + 1)]
        .into_iter()
        .filter(move |&(a, b)| a < rows && b < cols)
}

fn bfs(map: &WalkMap, start: Pos) -> Vec<Option<usize>> {
    let (rows, cols) = (map.rows(), map.cols());
    let mut dist = vec![None; rows * cols];
    dist[start.0 * cols + start.1] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        let d = dist[p.0 * cols + p.1].unwrap();
        for n in neighbours(p, rows, cols) {
            if map.is_passable(n) && dist[n.0 * cols + n.1].is_none() {
                dist[n.0 * cols + n.1] = Some(d + 1);
                queue.push_back(n);
            }
        }
    }
    dist
}

// 1. Metric fixture suite.

#[derive(serde::Deserialize)]
struct Suite {
    maps: Vec<FixtureMap>,
    corpus_vutr: f64,
    composite: Vec<Vote>,
}

#[derive(serde::Deserialize)]
struct FixtureMap {
    name: String,
    rows: Vec<String>,
    walkable: String,
    start: Pos,
    objectives: Vec<Pos>,
    entropy: f64,
    area: usize,
    unwalkable: usize,
    valid: bool,
    aspao: Option<f64>,
}

#[derive(serde::Deserialize)]
struct Vote {
    votes: Vec<u64>,
    weights: Vec<f64>,
    score: f64,
}

fn metric_fixtures() -> Outcome {
    let text = fs::read_to_string(root("fixtures/metric-maps.json")).map_err(|e| e.to_string())?;
    let suite: Suite = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    ensure(suite.maps.len() == 12, || {
        format!("{} fixture maps, want 12", suite.maps.len())
    })?;
    let mut evals = Vec::new();
    for m in &suite.maps {
        let grid = TileGrid::from_lines(&m.rows);
        let walkable: WalkableSet = m.walkable.chars().collect();
        let map = WalkMap::from_grid(&grid, &walkable);
        let e = evaluate_map(&m.name, &grid, &map, m.start, &m.objectives).map_err(|e| e.to_string())?;
        ensure((e.entropy - m.entropy).abs() < 1e-9, || {
            format!("{}: entropy {}", m.name, e.entropy)
        })?;
        ensure(e.area == m.area && e.unwalkable_area == m.unwalkable, || {
            format!("{}: areas", m.name)
        })?;
        ensure(e.utr == m.unwalkable as f64 / m.area as f64, || {
            format!("{}: UTR {}", m.name, e.utr)
        })?;
        ensure(e.valid == m.valid, || format!("{}: validity", m.name))?;
        ensure(e.vutr() == if m.valid { e.utr } else { 0.0 }, || {
            format!("{}: VUTR", m.name)
        })?;
        ensure(e.aspao == m.aspao, || {
            format!("{}: ASPAO {:?} want {:?}", m.name, e.aspao, m.aspao)
        })?;
        evals.push(e);
    }
    let cv = corpus_vutr(&evals).map_err(|e| e.to_string())?;
    ensure((cv - suite.corpus_vutr).abs() < 1e-12, || format!("corpus VUTR {cv}"))?;
    for v in &suite.composite {
        let s = composite_score(&v.votes, &v.weights).map_err(|e| e.to_string())?;
        ensure((s - v.score).abs() < 1e-12, || {
            format!("composite {:?} gave {s}", v.votes)
        })?;
    }
    Ok(format!("12 maps, {} composite cases", suite.composite.len()))
}

// 2. A* and connectivity against BFS.

fn pathfinding_oracle() -> Outcome {
    let mut pairs = 0usize;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let open: Vec<bool> = (0..100).map(|_| !rng.gen_bool(0.3)).collect();
        let map = WalkMap::from_fn(10, 10, |(r, c)| open[r * 10 + c]);
        let cells: Vec<Pos> = (0..10).flat_map(|r| (0..10).map(move |c| (r, c))).collect();
        for &start in cells.iter().filter(|&&p| map.is_passable(p)) {
            let dist = bfs(&map, start);
            for &goal in cells.iter().filter(|&&p| map.is_passable(p)) {
                let got = astar(&PathQuery::new(&map, start, goal).unbounded()).status;
                match (dist[goal.0 * 10 + goal.1], got) {
                    (Some(d), PathStatus::Found(path)) if path.len() == d + 1 => pairs += 1,
                    (None, PathStatus::Unreachable) => {}
                    (d, s) => return Err(format!("seed {seed} {start:?}->{goal:?}: BFS {d:?}, A* {s:?}")),
                }
            }
        }
        let start = cells[(seed as usize * 37) % 100];
        let dist = bfs(&map, start);
        let flooded: Vec<bool> = cells
            .iter()
            .map(|&p| dist[p.0 * 10 + p.1].is_some() || neighbours(p, 10, 10).any(|n| dist[n.0 * 10 + n.1].is_some()))
            .collect();
        let report = connectivity_check(&map, start, &cells);
        ensure(report.reachable == flooded, || {
            format!("seed {seed}: connectivity differs from flood")
        })?;
    }
    Ok(format!("100 grids, {pairs} reachable pairs"))
}

// 3. Sequential placement against exhaustive search.

fn scaling_oracle() -> Outcome {
    const N: usize = 12;
    let mut placed = 0;
    for seed in 0..60u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
        let ground = ['g', 'g', 'g', 'd', 'T', 'w', 'R'];
        let mut rows: Vec<Vec<char>> = (0..N)
            .map(|_| (0..N).map(|_| *ground.choose(&mut rng).unwrap()).collect())
            .collect();
        let mut cells: Vec<Pos> = (0..N).flat_map(|r| (0..N).map(move |c| (r, c))).collect();
        cells.shuffle(&mut rng);
        let anchors = rng.gen_range(2..=4);
        for &(r, c) in &cells[..anchors] {
            rows[r][c] = if rng.gen_bool(0.5) { 'H' } else { 'K' };
        }
        let objectives: Vec<Pos> = cells[anchors..anchors + 2].to_vec();
        for &(r, c) in &objectives {
            rows[r][c] = 'O';
        }
        let grid = TileGrid::new(rows);
        let sizes: BTreeMap<char, usize> = [('H', rng.gen_range(2..=4)), ('K', 3)].into();
        let plan = ScalingPlan::new(vec!['H', 'K'], sizes.clone()).map_err(|e| e.to_string())?;
        let walkable: WalkableSet = ['g', 'd'].into();
        let objs: Vec<Objective> = objectives
            .iter()
            .map(|&p| Objective::new("o", ObjectiveKind::ChatWithNpc, 'O', p))
            .collect();
        let labels = classify_tiles(&grid, &walkable, &objs, &plan.tile_set()).map_err(|e| e.to_string())?;
        let outcome = apply_scaling(&grid, &labels, &plan).map_err(|e| e.to_string())?;

        let mut freq: BTreeMap<char, u64> = BTreeMap::new();
        for (_, ch) in grid.cells() {
            *freq.entry(ch).or_default() += 1;
        }
        let mut blocked: BTreeSet<Pos> = objectives.iter().copied().collect();
        let mut expected = Vec::new();
        for (anchor, ch) in grid.cells().filter(|(_, ch)| sizes.contains_key(ch)) {
            let s = sizes[&ch];
            let mut best: Option<(Pos, u64)> = None;
            for m in anchor.0.saturating_sub(s - 1)..=anchor.0 {
                for n in anchor.1.saturating_sub(s - 1)..=anchor.1 {
                    if m + s > N || n + s > N {
                        continue;
                    }
                    let square: Vec<Pos> = (m..m + s).flat_map(|r| (n..n + s).map(move |c| (r, c))).collect();
                    if square.iter().any(|p| blocked.contains(p)) {
                        continue;
                    }
                    let score = square.iter().map(|&p| freq[&grid.get(p).unwrap()]).sum();
                    if best.is_none_or(|(_, b)| score > b) {
                        best = Some(((m, n), score));
                    }
                }
            }
            if let Some(((m, n), score)) = best {
                blocked.extend((m..m + s).flat_map(|r| (n..n + s).map(move |c| (r, c))));
                expected.push((ch, (m, n), score));
            }
        }
        let got: Vec<(char, Pos, u64)> = outcome
            .placements
            .iter()
            .map(|p| (p.tile, p.top_left, p.score))
            .collect();
        ensure(got == expected, || {
            format!("seed {seed}: placements {got:?}, oracle {expected:?}")
        })?;

        let mut covered = BTreeSet::new();
        for p in &outcome.placements {
            for cell in p.cells() {
                ensure(covered.insert(cell), || {
                    format!("seed {seed}: footprints overlap at {cell:?}")
                })?;
                ensure(!objectives.contains(&cell), || {
                    format!("seed {seed}: objective {cell:?} covered")
                })?;
            }
        }
        placed += got.len();
    }
    ensure(placed > 0, || "no placements at all".into())?;
    Ok(format!("60 maps, {placed} placements"))
}

// 4. Evolutionary baseline.

fn baseline_band(dir: &Path) -> Outcome {
    let mut scores = Vec::new();
    let mut slowest = Duration::ZERO;
    for seed in 1..=5 {
        let out = dir.join(format!("baseline-{seed}"));
        let clock = Instant::now();
        storyforge(&[
            "baseline",
            "--seed",
            &seed.to_string(),
            "--pop",
            "50",
            "--gens",
            "200",
            "--out",
            path_str(&out),
        ])?;
        slowest = slowest.max(clock.elapsed());
        let report = read_json(&out.join("evaluation.json"))?;
        let eval = &report["evaluation"];
        ensure(eval["valid"] == true, || format!("seed {seed}: playability 0"))?;
        let aspao = eval["aspao"].as_f64().ok_or(format!("seed {seed}: ASPAO undefined"))?;
        ensure(aspao >= 25.0, || format!("seed {seed}: ASPAO {aspao:.2} below 25"))?;
        let mut log = csv::Reader::from_path(out.join("log.csv")).map_err(|e| e.to_string())?;
        let best: Vec<f64> = log
            .records()
            .map(|r| {
                r.map_err(|e| e.to_string())
                    .and_then(|r| r[1].parse::<f64>().map_err(|e| e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        ensure(best.len() == 201, || format!("seed {seed}: {} log rows", best.len()))?;
        ensure(best.windows(2).all(|w| w[1] >= w[0]), || {
            format!("seed {seed}: best fitness decreased")
        })?;
        scores.push(aspao);
    }
    ensure(scores.iter().any(|&a| a >= 30.0), || {
        format!("no seed reached ASPAO 30: {scores:?}")
    })?;
    ensure(slowest < Duration::from_secs(120), || {
        format!("slowest seed took {slowest:?}")
    })?;
    let listed: Vec<String> = scores.iter().map(|a| format!("{a:.2}")).collect();
    Ok(format!(
        "ASPAO {} (slowest seed {:.2}s)",
        listed.join(", "),
        slowest.as_secs_f64()
    ))
}

// 5. Replay determinism.

const OUTPUTS: [&str; 3] = ["bundle.json", "blocks.json", "render.ppm"];

fn replay_forest(out: &Path) -> Result<(), String> {
    let fixture = root("fixtures/forest-01.json");
    storyforge(&[
        "generate",
        "--backend",
        "replay",
        "--fixtures",
        path_str(&fixture),
        "--seed",
        "7",
        "--out",
        path_str(out),
    ])
}

fn replay_determinism(dir: &Path) -> Outcome {
    let (a, b) = (dir.join("replay-a"), dir.join("replay-b"));
    replay_forest(&a)?;
    replay_forest(&b)?;
    for name in OUTPUTS {
        ensure(bytes(&a.join(name))? == bytes(&b.join(name))?, || {
            format!("{name} differs between runs")
        })?;
    }
    Ok("bundle, blocks and render identical across two runs".into())
}

// 6. Offline stub generation.

fn stub_generation(dir: &Path) -> Outcome {
    let out = dir.join("stub-3");
    storyforge(&["generate", "--backend", "stub", "--seed", "3", "--out", path_str(&out)])?;
    let text = fs::read_to_string(out.join("bundle.json")).map_err(|e| e.to_string())?;
    let bundle = LevelBundle::from_json(&text).map_err(|e| e.to_string())?;
    let grid = &bundle.grid;
    ensure(grid.is_rectangular() && !grid.is_empty(), || {
        "main map is not rectangular".into()
    })?;
    let stray: Vec<char> = grid
        .charset()
        .into_iter()
        .filter(|&c| !bundle.legend.contains_char(c))
        .collect();
    ensure(stray.is_empty(), || format!("tiles outside the legend: {stray:?}"))?;
    ensure(grid.positions_of(PROTAGONIST).len() == 1, || {
        "'@' not placed exactly once".into()
    })?;
    ensure(!grid.positions_of(ANTAGONIST).is_empty(), || "'#' not placed".into())?;
    ensure(bundle.objectives.len() == 8, || {
        format!("{} objectives", bundle.objectives.len())
    })?;
    for kind in [
        ObjectiveKind::ExitMaze,
        ObjectiveKind::SurviveWaves,
        ObjectiveKind::CollectItems,
    ] {
        let subs: Vec<_> = bundle.submaps.iter().filter(|s| s.kind == kind).collect();
        ensure(!subs.is_empty(), || format!("no {kind:?} sub-map"))?;
        ensure(subs.iter().all(|s| s.is_valid()), || {
            format!("{kind:?} sub-map fails connectivity")
        })?;
    }
    Ok(format!(
        "{}x{} map, 8 objectives, {} connected sub-maps over 3 kinds",
        grid.rows(),
        grid.cols(),
        bundle.submaps.len()
    ))
}

// 7. Declared substitutes for the human and model studies.

fn substitutes(dir: &Path) -> Outcome {
    let embedding: Vec<f64> = (1..=64).map(|i| ((i * 37) % 11) as f64 - 4.5).collect();
    let same = cosine_similarity(&embedding, &embedding).ok_or("cosine undefined")?;
    ensure((same - 1.0).abs() <= 1e-9, || format!("identical vectors gave {same}"))?;

    let weights = [4.0, 3.0, 2.0, 1.0];
    let top = composite_score(&[8, 6, 2, 1], &weights).map_err(|e| e.to_string())?;
    ensure((top * 100.0).round() == 324.0, || {
        format!("votes (8,6,2,1) gave {top:.4}")
    })?;
    let rank = rank_weights(4);
    let mut ceiling: f64 = 0.0;
    for a in 0..=17u64 {
        for b in 0..=17 - a {
            for c in 0..=17 - a - b {
                let votes = [a, b, c, 17 - a - b - c];
                ceiling = ceiling.max(composite_score(&votes, &rank).map_err(|e| e.to_string())?);
            }
        }
    }

    let corpus = dir.join("stub-corpus");
    for seed in 1..=5 {
        storyforge(&[
            "generate",
            "--seed",
            &seed.to_string(),
            "--no-critique",
            "--out",
            path_str(&corpus.join(format!("s{seed}"))),
        ])?;
    }
    let mut entropies = Vec::new();
    for seed in 1..=5 {
        let text = fs::read_to_string(corpus.join(format!("s{seed}/bundle.json"))).map_err(|e| e.to_string())?;
        let e = LevelBundle::from_json(&text)
            .map_err(|e| e.to_string())?
            .evaluate("m")
            .map_err(|e| e.to_string())?;
        ensure(e.tile_type_count >= 15, || {
            format!("seed {seed}: {} tile types", e.tile_type_count)
        })?;
        ensure((3.0..=5.0).contains(&e.entropy), || {
            format!("seed {seed}: entropy {:.3}", e.entropy)
        })?;
        entropies.push(format!("{:.2}", e.entropy));
    }
    Ok(format!(
        "cosine(x,x) = {same}; votes (8,6,2,1) with weights (4,3,2,1) give {top:.2} \
         (weights (3,2,1,0) top out at {ceiling:.2} for 17 voters); stub entropies {}",
        entropies.join(", ")
    ))
}

// 8. Format stability.

fn format_stability(dir: &Path) -> Outcome {
    let golden = root("fixtures/golden/forest-01-seed7");
    let bundle_text = fs::read_to_string(golden.join("bundle.json")).map_err(|e| e.to_string())?;
    let bundle = LevelBundle::from_json(&bundle_text).map_err(|e| e.to_string())?;
    ensure(bundle.to_json() == bundle_text, || {
        "bundle JSON does not round-trip".into()
    })?;
    let blocks_text = fs::read_to_string(golden.join("blocks.json")).map_err(|e| e.to_string())?;
    let blocks = import_block_json(&blocks_text).map_err(|e| e.to_string())?;
    ensure(export_block_json(&blocks) == blocks_text, || {
        "block JSON does not round-trip".into()
    })?;

    let fresh = dir.join("golden-check");
    replay_forest(&fresh)?;
    for name in OUTPUTS.into_iter().chain(["trace.jsonl"]) {
        ensure(bytes(&fresh.join(name))? == bytes(&golden.join(name))?, || {
            format!("{name} differs from golden")
        })?;
    }
    Ok(format!(
        "round-trips hold, 4 golden files match ({} blocks)",
        blocks.len()
    ))
}

#[test]
fn acceptance_criteria() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let criteria: Vec<(&str, Duration, Check)> = vec![
        (
            "metric fixture suite",
            Duration::from_secs(1),
            Box::new(metric_fixtures),
        ),
        (
            "pathfinding oracle",
            Duration::from_secs(5),
            Box::new(pathfinding_oracle),
        ),
        ("scaling oracle", Duration::from_secs(10), Box::new(scaling_oracle)),
        (
            "EA baseline band",
            Duration::from_secs(600),
            Box::new(|| baseline_band(d)),
        ),
        (
            "replay determinism",
            Duration::from_secs(5),
            Box::new(|| replay_determinism(d)),
        ),
        (
            "offline stub generation",
            Duration::from_secs(10),
            Box::new(|| stub_generation(d)),
        ),
        (
            "declared substitutes",
            Duration::from_secs(60),
            Box::new(|| substitutes(d)),
        ),
        (
            "format stability",
            Duration::from_secs(10),
            Box::new(|| format_stability(d)),
        ),
    ];
    let mut failed = Vec::new();
    let mut stdout = std::io::stdout().lock();
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let clock = Instant::now();
        let result = check();
        let took = clock.elapsed();
        let result = result
            .and_then(|detail| ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}")).map(|_| detail));
        let line = match &result {
            Ok(detail) => format!(
                "criterion {}: PASS {name} ({:.2}s): {detail}",
                i + 1,
                took.as_secs_f64()
            ),
            Err(reason) => format!(
                "criterion {}: FAIL {name} ({:.2}s): {reason}",
                i + 1,
                took.as_secs_f64()
            ),
        };
        writeln!(stdout, "{line}").unwrap();
        if result.is_err() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

use std::path::PathBuf;

use storyforge::map::{parse_legend, ObjectiveKind, Pos, TileGrid, WalkableSet, ANTAGONIST, PROTAGONIST};
use storyforge::pathfind::{connectivity_check, WalkMap};
use storyforge::pipeline::parse::parse_objectives;
use storyforge::pipeline::world::{prepare_grid, realise_objectives};
use storyforge::pipeline::{
    run_pipeline, BackendError, GenerationTrace, PipelineConfig, PipelineError, ReplayBackend, Stage, TextBackend,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn replay(name: &str) -> ReplayBackend {
    ReplayBackend::load(&fixture(name)).unwrap()
}

fn seeded(seed: u64) -> PipelineConfig {
    PipelineConfig {
        rng_seed: seed,
        ..PipelineConfig::default()
    }
}

#[test]
fn forest_fixture_yields_full_story_and_valid_world() {
    let run = run_pipeline(&seeded(7), &replay("forest-01.json")).unwrap();
    let b = &run.bundle;
    assert_eq!(b.story.paragraphs.len(), 5);
    assert_eq!(b.story.n_objectives, 8);
    assert_eq!(b.objectives.len(), 8);
    assert!(b.legend.contains_char(PROTAGONIST) && b.legend.contains_char(ANTAGONIST));
    let environment = b
        .legend
        .iter()
        .filter(|(_, c)| *c != PROTAGONIST && *c != ANTAGONIST)
        .count();
    assert!(environment >= 5);
    assert_eq!((b.grid_unscaled.rows(), b.grid_unscaled.cols()), (20, 18));
    assert!(b.validity.pre_scaling);
    assert_eq!(b.validity.refinement_rounds, 1);

    let walk = WalkMap::from_grid(&b.grid_unscaled, &b.walkable);
    assert!(connectivity_check(&walk, b.start, &b.objective_positions()).valid);
    assert!(connectivity_check(&b.walk_map(), b.start, &b.objective_positions()).valid);
    assert_eq!(run.trace.count(Stage::World), 1);
    for kind in [
        ObjectiveKind::ExitMaze,
        ObjectiveKind::SurviveWaves,
        ObjectiveKind::CollectItems,
    ] {
        assert_eq!(b.submaps.iter().filter(|s| s.kind == kind).count(), 1);
    }
    assert_eq!(b.portals.len(), 3);
}

#[test]
fn refinement_fixture_takes_two_rounds() {
    let run = run_pipeline(&seeded(7), &replay("refine-01.json")).unwrap();
    assert_eq!(run.bundle.validity.refinement_rounds, 2);
    assert!(run.bundle.validity.pre_scaling);
    assert_eq!(run.trace.count(Stage::World), 2);
    assert_eq!(run.trace.count(Stage::Objectives), 2);
    let verdicts: Vec<&str> = run
        .trace
        .records
        .iter()
        .filter(|r| r.stage == Stage::Objectives)
        .filter_map(|r| r.verdict.as_deref())
        .collect();
    assert_eq!(verdicts.len(), 2);
    assert!(verdicts[0].contains("unreachable"));
    assert_eq!(verdicts[1], "valid");
}

#[test]
fn replay_is_a_pure_function() {
    let a = run_pipeline(&seeded(7), &replay("forest-01.json")).unwrap();
    let b = run_pipeline(&seeded(7), &replay("forest-01.json")).unwrap();
    assert_eq!(a.bundle.to_json(), b.bundle.to_json());
    assert_eq!(a.trace.to_jsonl(), b.trace.to_jsonl());

    let from_trace = GenerationTrace::from_jsonl(&a.trace.to_jsonl()).unwrap();
    let c = run_pipeline(&seeded(7), &ReplayBackend::from_trace(&from_trace)).unwrap();
    assert_eq!(a.bundle.to_json(), c.bundle.to_json());
}

#[test]
fn prompt_drift_is_a_hard_error() {
    let config = PipelineConfig {
        n_objectives: 6,
        ..seeded(7)
    };
    let failure = run_pipeline(&config, &replay("forest-01.json")).unwrap_err();
    assert!(matches!(
        failure.error,
        PipelineError::Backend(BackendError::UnknownDigest(_))
    ));
    let backend = replay("forest-01.json");
    assert!(matches!(
        backend.complete("hello", &[]),
        Err(BackendError::UnknownDigest(_))
    ));
}

#[test]
fn traces_keep_issue_order_and_round_limits() {
    let run = run_pipeline(&seeded(3), &storyforge::pipeline::StubBackend::new(3)).unwrap();
    let stages: Vec<Stage> = run.trace.records.iter().map(|r| r.stage).collect();
    assert_eq!(
        stages[..4],
        [Stage::Story, Stage::Characters, Stage::Tiles, Stage::Legend]
    );
    let world_at = stages.iter().position(|&s| s == Stage::World).unwrap();
    assert!(stages[..world_at].iter().all(|&s| s != Stage::Objectives));
    let cfg = PipelineConfig::default();
    for stage in [Stage::Story, Stage::Legend, Stage::World, Stage::Objectives] {
        assert!(run.trace.count(stage) <= cfg.max_refinement_rounds, "{stage:?}");
    }
}

/// Nearest cell, by grid steps from the clamped proposal, that satisfies `ok`.
fn nearest_distance(grid: &TileGrid, from: Pos, ok: impl Fn(char) -> bool) -> Option<usize> {
    grid.cells()
        .filter(|&(_, c)| ok(c))
        .map(|(p, _)| p.0.abs_diff(from.0) + p.1.abs_diff(from.1))
        .min()
}

#[test]
fn misplaced_objectives_are_repaired_to_nearest_match() {
    let legend =
        parse_legend("{'Protagonist': '@', 'Antagonist': '#', 'Grass': 'g', 'Tree': 'T', 'Well': 'O'}").unwrap();
    let walkable: WalkableSet = ['g'].into();
    let rows = [
        "gggggggggg",
        "gTgggggggg",
        "gggggg#ggg",
        "gggTgggggg",
        "gg@gggggOg",
        "gggggggggg",
        "ggOgggTggg",
        "gggggggggg",
        "gggggggTgg",
        "gggggTgggg",
    ];
    let raw_grid = TileGrid::from_lines(&rows);
    let text = "{'Defeat Vorath': ['#', 2, 6], 'Chat with the keeper at the well': ['O', 99, 99], 'Climb the tree': ['T', 0, 0], 'Meet the bard': ['Q', -4, 5]}";
    let raw = parse_objectives(text).unwrap();
    let mut draft = prepare_grid(&raw_grid, &legend, &walkable);
    let placed = realise_objectives(&raw, &mut draft).unwrap();

    assert_eq!(placed[0].position, (2, 6));
    assert_eq!(placed[0].kind, ObjectiveKind::DefeatEnemy);

    let well = placed[1].position;
    assert_eq!(raw_grid.get(well), Some('O'));
    let d = nearest_distance(&raw_grid, (9, 9), |c| c == 'O').unwrap();
    assert_eq!(well.0.abs_diff(9) + well.1.abs_diff(9), d);

    let tree = placed[2].position;
    assert_eq!(tree, (1, 1));

    let bard = placed[3].position;
    assert_eq!(raw_grid.get(bard), Some('g'));
    assert_eq!(bard.0 + bard.1.abs_diff(5), 0);
    assert_eq!(draft.grid.get(bard), Some(placed[3].anchor));
    assert!(draft.legend.contains_char(placed[3].anchor));

    assert!(matches!(parse_objectives("no dict here"), Err(PipelineError::Map(_))));
    assert_eq!(realise_objectives(&[], &mut draft), Err(PipelineError::EmptyObjectives));
}

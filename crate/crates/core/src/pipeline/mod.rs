//! The story-to-level pipeline over a pluggable text backend.
//!
//! Every stage renders a prompt, asks the backend, parses the answer and
//! retries with a corrective note when parsing fails. World generation
//! additionally validates objective reachability and re-prompts with the
//! earlier maps as references. Every exchange lands in a
//! [`GenerationTrace`], which replays into an identical bundle.

mod backend;
mod config;
pub mod live;
pub mod parse;
pub mod prompts;
mod stub;
mod trace;
pub mod world;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use backend::{
    embed_digest, exchange_digest, hashed_bag_of_words, BackendError, FixtureRecord, Message, RecordingBackend,
    ReplayBackend, Role, ScriptedBackend, TextBackend, BAG_OF_WORDS_DIMS,
};
pub use config::{BackendKind, PipelineConfig};
pub use live::{LiveBackend, LiveConfig};
pub use prompts::{Stage, PROMPTS_VERSION};
pub use stub::StubBackend;
pub use trace::{GenerationTrace, TraceRecord};

use crate::export::{
    export_block_json, tiles_to_blocks, CharacterSketch, ExportError, LevelBundle, TileBlockTable, Validity,
    SCHEMA_VERSION,
};
use crate::map::{
    classify_tiles, parse_grid, parse_legend, MapError, Objective, ObjectiveKind, StorySpec, TileGrid, TileLegend,
    WalkableSet, PROTAGONIST,
};
use crate::metrics::cosine_similarity;
use crate::pathfind::{connectivity_check, WalkMap};
use crate::scaling::{
    apply_scaling_with, stamp_structures, SafeMode, ScalingError, ScalingOptions, ScalingPlan, TemplateError,
    TemplateLibrary,
};
use crate::submap::{generate_for, Portal, SubmapError};
use world::{check_objectives, prepare_grid, realise_objectives, WorldDraft};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed story: {0}")]
    MalformedStory(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("could not parse {stage} response: {message}")]
    ParseFailure { stage: String, message: String },
    #[error("no objectives could be parsed")]
    EmptyObjectives,
    #[error("objective placement failed: {0}")]
    Placement(String),
    #[error(transparent)]
    Scaling(#[from] ScalingError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Submap(#[from] SubmapError),
    #[error(transparent)]
    Export(#[from] ExportError),
}

/// A conversation with the backend plus the trace of every exchange.
pub struct Session<'a> {
    backend: &'a dyn TextBackend,
    history: Vec<Message>,
    trace: GenerationTrace,
    attempts: usize,
}

impl<'a> Session<'a> {
    /// `attempts` bounds the backend calls of any one stage.
    pub fn new(backend: &'a dyn TextBackend, attempts: usize) -> Self {
        Self {
            backend,
            history: Vec::new(),
            trace: GenerationTrace::default(),
            attempts: attempts.max(1),
        }
    }

    pub fn trace(&self) -> &GenerationTrace {
        &self.trace
    }

    pub fn into_trace(self) -> GenerationTrace {
        self.trace
    }

    pub fn history(&self) -> &[Message] {
        &self.history
    }

    fn exchange(
        &mut self,
        stage: Stage,
        round: usize,
        prompt: &str,
        history: &[Message],
    ) -> Result<String, PipelineError> {
        let response = self.backend.complete(prompt, history)?;
        self.trace.push(TraceRecord {
            stage,
            round,
            prompt: prompt.to_string(),
            prompt_sha256: exchange_digest(prompt, history),
            response: response.clone(),
            parse_outcome: "pending".into(),
            verdict: None,
        });
        Ok(response)
    }

    fn mark(&mut self, outcome: &Result<(), String>, verdict: Option<String>) {
        if let Some(r) = self.trace.last_mut() {
            r.parse_outcome = match outcome {
                Ok(()) => "ok".into(),
                Err(e) => format!("error: {e}"),
            };
            r.verdict = verdict;
        }
    }

    /// Asks until `parse` accepts, re-prompting with the failed answers and
    /// a corrective note. With `converse` the exchange sees the session
    /// history and the accepted pair joins it.
    fn ask<T>(
        &mut self,
        stage: Stage,
        prompt: &str,
        converse: bool,
        mut parse: impl FnMut(&str) -> Result<T, PipelineError>,
    ) -> Result<T, PipelineError> {
        let base: Vec<Message> = if converse { self.history.clone() } else { Vec::new() };
        let mut context = base.clone();
        let mut current = prompt.to_string();
        let mut last_error = None;
        for attempt in 1..=self.attempts {
            let response = self.exchange(stage, attempt, &current, &context)?;
            match parse(&response) {
                Ok(value) => {
                    self.mark(&Ok(()), None);
                    if converse {
                        self.history.push(Message::user(prompt));
                        self.history.push(Message::assistant(response));
                    }
                    return Ok(value);
                }
                Err(e) => {
                    log::warn!("{} attempt {attempt}: {e}", stage.name());
                    self.mark(&Err(e.to_string()), None);
                    context.push(Message::user(current.clone()));
                    context.push(Message::assistant(response));
                    current = prompts::retry(prompt, &e.to_string());
                    last_error = Some(e);
                }
            }
        }
        Err(last_error.expect("at least one attempt"))
    }

    fn embed(&mut self, text: &str) -> Result<Vec<f64>, PipelineError> {
        let v = self.backend.embed(text)?;
        self.trace.push(TraceRecord {
            stage: Stage::Embed,
            round: 1,
            prompt: text.to_string(),
            prompt_sha256: embed_digest(text),
            response: serde_json::to_string(&v).expect("vector serializes"),
            parse_outcome: "ok".into(),
            verdict: None,
        });
        Ok(v)
    }
}

pub fn generate_story(session: &mut Session<'_>, config: &PipelineConfig) -> Result<StorySpec, PipelineError> {
    let phrase = config.paragraph_phrase();
    let objectives = config.n_objectives.to_string();
    let prompt = prompts::render(prompts::STORY, &[("paragraphs", &phrase), ("objectives", &objectives)]);
    let paragraphs = session.ask(Stage::Story, &prompt, true, |text| {
        parse::parse_story(text, config.min_paragraphs, config.max_paragraphs)
    })?;
    Ok(StorySpec {
        paragraphs,
        n_objectives: config.n_objectives,
        ..Default::default()
    })
}

/// Legend, walkable and important tiles, and character sketches, with the
/// story's cast filled in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldInputs {
    pub legend: TileLegend,
    pub walkable: WalkableSet,
    pub important: Vec<char>,
    pub characters: Vec<CharacterSketch>,
}

pub fn extract_world_inputs(session: &mut Session<'_>, story: &mut StorySpec) -> Result<WorldInputs, PipelineError> {
    let characters = session.ask(Stage::Characters, prompts::CHARACTERS, true, parse::parse_characters)?;
    let (hero, villain, npcs) = parse::cast_roles(&characters);
    story.protagonist = hero;
    story.antagonist = villain;
    story.npcs = npcs;
    let tiles = session.ask(Stage::Tiles, prompts::TILES, true, parse::parse_tile_list)?;
    story.environment = tiles.join(", ");
    let legend = session.ask(Stage::Legend, prompts::LEGEND, true, |t| Ok(parse_legend(t)?))?;
    let dict = legend.render();
    let walkable_prompt = prompts::render(prompts::WALKABLE, &[("tile_map_dict", &dict)]);
    let walkable: WalkableSet = session
        .ask(Stage::Walkable, &walkable_prompt, true, |t| {
            parse::parse_char_list(t, &legend)
        })?
        .into_iter()
        .collect();
    let important_prompt = prompts::render(prompts::IMPORTANT, &[("tile_map_dict", &dict)]);
    let important = session.ask(Stage::Important, &important_prompt, true, |t| {
        parse::parse_char_list(t, &legend)
    })?;
    Ok(WorldInputs {
        legend,
        walkable,
        important,
        characters,
    })
}

/// The accepted main map and where it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedWorld {
    pub draft: WorldDraft,
    pub objectives: Vec<Objective>,
    pub valid: bool,
    pub rounds: usize,
}

/// Prompts for a world, places the protagonist and the objectives, and
/// checks every objective with capped A*. Failed rounds re-prompt with all
/// earlier grids attached. The last complete round is returned even when
/// invalid.
pub fn generate_world(
    session: &mut Session<'_>,
    inputs: &WorldInputs,
    config: &PipelineConfig,
) -> Result<GeneratedWorld, PipelineError> {
    let base_prompt = prompts::render(
        prompts::WORLD,
        &[
            ("tile_map_dict", &inputs.legend.render()),
            ("important_tiles_list", &prompts::char_list(&inputs.important)),
            (
                "walkable_tiles_list",
                &prompts::char_list(&inputs.walkable.iter().copied().collect::<Vec<_>>()),
            ),
        ],
    );
    let history = session.history.clone();
    let mut references: Vec<TileGrid> = Vec::new();
    let mut reason = String::new();
    let mut best: Option<(GeneratedWorld, [Message; 4])> = None;
    let mut last_error = None;

    for round in 1..=config.max_refinement_rounds {
        let prompt = if round == 1 {
            base_prompt.clone()
        } else {
            let refs: String = references
                .iter()
                .enumerate()
                .map(|(i, g)| format!("Map {}:\n```\n{}\n```\n", i + 1, g.to_text()))
                .collect();
            let suffix = prompts::render(prompts::WORLD_REFINE, &[("reason", &reason), ("references", &refs)]);
            format!("{base_prompt}{suffix}")
        };
        let world_text = session.exchange(Stage::World, round, &prompt, &history)?;
        let raw = match parse_grid(&world_text) {
            Ok(g) => g,
            Err(e) => {
                session.mark(&Err(e.to_string()), None);
                reason = format!("the map could not be parsed ({e})");
                last_error = Some(PipelineError::Map(e));
                continue;
            }
        };
        session.mark(&Ok(()), None);
        let mut draft = prepare_grid(&raw, &inputs.legend, &inputs.walkable);
        references.push(draft.grid.clone());

        let mut context = history.clone();
        context.push(Message::user(prompt.clone()));
        context.push(Message::assistant(world_text.clone()));
        let objective_text = session.exchange(Stage::Objectives, round, prompts::OBJECTIVES, &context)?;
        let placed = parse::parse_objectives(&objective_text).and_then(|raw| realise_objectives(&raw, &mut draft));
        let objectives = match placed {
            Ok(o) => o,
            Err(e) => {
                session.mark(&Err(e.to_string()), Some("invalid".into()));
                reason = format!("the objectives could not be placed ({e})");
                last_error = Some(e);
                continue;
            }
        };
        let check = check_objectives(&draft, &objectives, config.astar_iteration_cap);
        session.mark(&Ok(()), Some(check.verdict()));
        let valid = check.is_valid();
        reason = check.verdict();
        let exchanges = [
            Message::user(prompt),
            Message::assistant(world_text),
            Message::user(prompts::OBJECTIVES),
            Message::assistant(objective_text),
        ];
        best = Some((
            GeneratedWorld {
                draft,
                objectives,
                valid,
                rounds: round,
            },
            exchanges,
        ));
        if valid {
            break;
        }
    }

    match best {
        Some((world, exchanges)) => {
            session.history.extend(exchanges);
            Ok(world)
        }
        None => Err(last_error.expect("a failed round leaves an error")),
    }
}

/// Asks which tiles to scale and how large. Reserved and absent tiles are
/// dropped; sizes default to 2 and are clamped to the map. Unparseable
/// answers yield an empty plan.
pub fn select_scaling(
    session: &mut Session<'_>,
    grid: &TileGrid,
    legend: &TileLegend,
) -> Result<ScalingPlan, PipelineError> {
    let prompt = prompts::render(
        prompts::SCALING,
        &[("tile_map", &grid.to_text()), ("des2not", &legend.render())],
    );
    let present = grid.charset();
    let tiles = match session.ask(Stage::ScalingTiles, &prompt, true, |t| {
        parse::parse_scaling_list(t, legend)
    }) {
        Ok(list) => list
            .into_iter()
            .filter(|c| {
                let keep = present.contains(c);
                if !keep {
                    log::info!("dropping scaling tile '{c}': not on the map");
                }
                keep
            })
            .collect::<Vec<_>>(),
        Err(PipelineError::Backend(e)) => return Err(e.into()),
        Err(e) => {
            log::warn!("scaling skipped: {e}");
            Vec::new()
        }
    };
    if tiles.is_empty() {
        return Ok(ScalingPlan::empty());
    }
    let sizes_prompt = prompts::render(prompts::SIZES, &[("tiles", &prompts::char_list(&tiles))]);
    let proposed = match session.ask(Stage::ScalingSizes, &sizes_prompt, true, |t| {
        parse::parse_sizes(t, legend)
    }) {
        Ok(s) => s,
        Err(PipelineError::Backend(e)) => return Err(e.into()),
        Err(e) => {
            log::warn!("using default sizes: {e}");
            BTreeMap::new()
        }
    };
    let limit = grid.rows().min(grid.cols());
    if limit < 2 {
        return Ok(ScalingPlan::empty());
    }
    let sizes: BTreeMap<char, usize> = tiles
        .iter()
        .map(|&c| {
            let s = proposed.get(&c).copied().filter(|&s| s >= 2).unwrap_or(2) as usize;
            (c, s.min(limit))
        })
        .collect();
    Ok(ScalingPlan::new(tiles, sizes)?)
}

fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A finished run: the bundle and the trace it was produced from.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub bundle: LevelBundle,
    pub trace: GenerationTrace,
}

/// A failed run keeps the trace up to the failure.
#[derive(Debug, Clone)]
pub struct PipelineFailure {
    pub error: PipelineError,
    pub trace: GenerationTrace,
}

pub fn run_pipeline(config: &PipelineConfig, backend: &dyn TextBackend) -> Result<PipelineRun, PipelineFailure> {
    let mut session = Session::new(backend, config.max_refinement_rounds);
    match build_bundle(&mut session, config) {
        Ok(mut bundle) => {
            let trace = session.into_trace();
            bundle.trace_sha256 = trace.sha256();
            Ok(PipelineRun { bundle, trace })
        }
        Err(error) => Err(PipelineFailure {
            error,
            trace: session.into_trace(),
        }),
    }
}

fn build_bundle(session: &mut Session<'_>, config: &PipelineConfig) -> Result<LevelBundle, PipelineError> {
    config.validate()?;
    let mut story = generate_story(session, config)?;
    let inputs = extract_world_inputs(session, &mut story)?;
    let world = generate_world(session, &inputs, config)?;
    let GeneratedWorld {
        draft,
        mut objectives,
        valid: pre_scaling,
        rounds,
    } = world;
    let WorldDraft {
        grid: grid_unscaled,
        legend,
        walkable,
        start,
    } = draft;

    let critique = if config.critique {
        let prompt = prompts::render(
            prompts::CRITIQUE,
            &[
                ("story", &story.text()),
                ("tile_map_dict", &legend.render()),
                ("tile_map", &grid_unscaled.to_text()),
            ],
        );
        Some(session.ask(Stage::Critique, &prompt, false, |t| Ok(t.to_string()))?)
    } else {
        None
    };

    let plan = if config.scaling_enabled {
        select_scaling(session, &grid_unscaled, &legend)?
    } else {
        ScalingPlan::empty()
    };
    let mut protected = objectives.clone();
    protected.push(Objective::new("start", ObjectiveKind::ChatWithNpc, PROTAGONIST, start));
    let classification = classify_tiles(&grid_unscaled, &walkable, &protected, &plan.tile_set())?;
    let targets: Vec<_> = objectives.iter().map(|o| o.position).collect();
    let options = ScalingOptions {
        safe_mode: config.safe_scaling.then(|| SafeMode {
            walkable: walkable.clone(),
            start,
            targets: targets.clone(),
        }),
    };
    let scaled = apply_scaling_with(&grid_unscaled, &classification, &plan, &options)?;

    let mut library = TemplateLibrary::with_fallback();
    let wanted: BTreeSet<(char, usize)> = scaled.placements.iter().map(|p| (p.tile, p.size)).collect();
    for (tile, size) in wanted {
        let name = legend.name_of(tile).unwrap_or("structure").to_string();
        let prompt = prompts::render(
            prompts::STRUCTURE,
            &[
                ("name", &name),
                ("tile", &tile.to_string()),
                ("size", &size.to_string()),
                ("last", &(size - 1).to_string()),
            ],
        );
        match session.ask(Stage::Structure, &prompt, false, |t| {
            parse::parse_structure(t, tile, size)
        }) {
            Ok(template) => library.add(template)?,
            Err(PipelineError::Backend(e)) => return Err(e.into()),
            Err(e) => log::warn!("plain structure for '{tile}': {e}"),
        }
    }
    let stamped = stamp_structures(&scaled.placements, &library, derive_seed(config.rng_seed, 1))?;

    let mut tile_blocks = TileBlockTable::fallback(&legend);
    let blocks_prompt = prompts::render(prompts::BLOCKS, &[("tile_map_dict", &legend.render())]);
    match session.ask(Stage::BlockMapping, &blocks_prompt, false, |t| {
        parse::parse_block_mapping(t, &legend)
    }) {
        Ok(proposed) => {
            let known: BTreeMap<char, String> =
                proposed.into_iter().filter(|(c, _)| legend.contains_char(*c)).collect();
            tile_blocks.override_with(&known);
        }
        Err(PipelineError::Backend(e)) => return Err(e.into()),
        Err(e) => log::warn!("fallback block palette: {e}"),
    }

    let walk = WalkMap::from_grid(&scaled.grid, &walkable).with_overrides(&stamped.overrides);
    let reach = connectivity_check(&walk, start, &targets);
    let unreachable_objectives: Vec<usize> = reach
        .reachable
        .iter()
        .enumerate()
        .filter(|(_, r)| !**r)
        .map(|(i, _)| i)
        .collect();

    let mut portals = Vec::new();
    let mut submaps = Vec::new();
    for (i, objective) in objectives.iter_mut().enumerate() {
        let seed = derive_seed(config.rng_seed, 100 + i as u64);
        let Some(generated) = generate_for(
            objective.kind,
            config.submap_size,
            config.arena_waves,
            config.collect_items,
            seed,
        ) else {
            continue;
        };
        let submap = generated?.with_id(format!("submap-{i}"));
        portals.push(Portal {
            main_map_position: objective.position,
            submap_id: submap.id.clone(),
            return_position: submap.entry,
        });
        submaps.push(submap);
    }
    let submaps_valid = submaps.iter().all(|s| s.is_valid());

    let blocks = tiles_to_blocks(
        &scaled.grid,
        &walkable,
        &tile_blocks,
        &stamped.structures,
        config.height_base,
    )?;
    let important = inputs.important.clone();
    Ok(LevelBundle {
        schema_version: SCHEMA_VERSION,
        prompts_version: PROMPTS_VERSION.to_string(),
        config: config.clone(),
        story,
        characters: inputs.characters,
        legend,
        walkable,
        important,
        start,
        grid_unscaled,
        grid: scaled.grid,
        classification: scaled.classification,
        objectives,
        portals,
        submaps,
        scaling_plan: plan,
        placements: scaled.placements,
        rolled_back: scaled.rolled_back,
        structures: stamped.structures,
        walk_overrides: stamped.overrides,
        tile_blocks,
        blocks,
        validity: Validity {
            refinement_rounds: rounds,
            pre_scaling,
            post_scaling: reach.valid,
            unreachable_objectives,
            submaps: submaps_valid,
        },
        critique,
        trace_sha256: String::new(),
    })
}

/// Similarity between the bundle's story and one reconstructed from its
/// block export alone.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub story: String,
    pub similarity: f64,
}

pub fn reconstructed_similarity(
    session: &mut Session<'_>,
    bundle: &LevelBundle,
) -> Result<Reconstruction, PipelineError> {
    let prompt = prompts::render(prompts::RECONSTRUCT, &[("blocks", &export_block_json(&bundle.blocks))]);
    let story = session.ask(Stage::Reconstruction, &prompt, false, |t| {
        let t = t.trim();
        if t.is_empty() {
            Err(PipelineError::MalformedStory("empty reconstruction".into()))
        } else {
            Ok(t.to_string())
        }
    })?;
    let original = session.embed(&bundle.story.text())?;
    let rebuilt = session.embed(&story)?;
    let similarity = cosine_similarity(&original, &rebuilt).ok_or_else(|| {
        PipelineError::Backend(BackendError::Protocol(
            "embeddings are empty, zero or of different lengths".into(),
        ))
    })?;
    Ok(Reconstruction { story, similarity })
}

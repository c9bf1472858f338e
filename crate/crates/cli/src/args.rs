use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use storyforge::export::RenderStyle;
use storyforge::pipeline::BackendKind;

#[derive(Debug, Parser)]
#[command(name = "storyforge", version, about = "Story-driven tile and voxel level generation")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Seed for every random choice; identical seeds give identical outputs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory. Defaults to runs/<timestamp>-seed<seed>.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full story-to-level pipeline.
    Generate(GenerateArgs),
    /// Score a directory of level bundles.
    Evaluate(EvaluateArgs),
    /// Expand single-cell tiles of a map file into square footprints.
    Scale(ScaleArgs),
    /// Run the evolutionary baseline.
    Baseline(BaselineArgs),
    /// Draw a bundle as a PPM image.
    Render(RenderArgs),
    /// Reconstruct a bundle's story from its blocks and compare embeddings.
    Coherence(CoherenceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Stub,
    Replay,
    Live,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Stub => BackendKind::Stub,
            BackendArg::Replay => BackendKind::Replay,
            BackendArg::Live => BackendKind::Live,
        }
    }
}

#[derive(Debug, Args)]
pub struct BackendOpts {
    /// Text backend. Live reads STORYFORGE_API_KEY, STORYFORGE_BASE_URL and STORYFORGE_MODEL.
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Replay fixture: a JSON array of recorded responses or a trace.jsonl.
    #[arg(long, value_name = "PATH")]
    pub fixtures: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StyleArg {
    Tiles,
    Blocks,
}

impl From<StyleArg> for RenderStyle {
    fn from(s: StyleArg) -> Self {
        match s {
            StyleArg::Tiles => RenderStyle::Tiles,
            StyleArg::Blocks => RenderStyle::Blocks,
        }
    }
}

#[derive(Debug, Args)]
pub struct RenderOpts {
    #[arg(long, value_enum, default_value = "tiles")]
    pub style: StyleArg,
    /// Pixels per grid cell.
    #[arg(long, default_value_t = storyforge::export::DEFAULT_CELL_SIZE)]
    pub cell: usize,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub backend: BackendOpts,
    /// TOML file with pipeline settings; flags override it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_objectives: Option<usize>,
    #[arg(long)]
    pub min_paragraphs: Option<usize>,
    #[arg(long)]
    pub max_paragraphs: Option<usize>,
    /// Backend calls allowed per stage, the first included.
    #[arg(long)]
    pub max_rounds: Option<usize>,
    /// Node expansions allowed per A* query.
    #[arg(long)]
    pub iteration_cap: Option<usize>,
    #[arg(long)]
    pub no_scaling: bool,
    /// Undo any scaling placement that cuts an objective off.
    #[arg(long)]
    pub safe_scaling: bool,
    #[arg(long)]
    pub no_critique: bool,
    #[arg(long)]
    pub submap_size: Option<usize>,
    #[arg(long)]
    pub waves: Option<usize>,
    #[arg(long)]
    pub items: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub height_base: Option<i32>,
    /// Also write the exchanges of this run as a replay fixture.
    #[arg(long, value_name = "PATH")]
    pub record: Option<PathBuf>,
    #[command(flatten)]
    pub render: RenderOpts,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory searched recursively for bundle.json and *.bundle.json files.
    pub corpus: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScaleArgs {
    /// Map in the level text format, one row per line.
    pub map: PathBuf,
    /// Walkable tile characters, e.g. "g.".
    #[arg(long)]
    pub walkable: String,
    /// Tile to scale and its footprint side, e.g. H=3. Repeatable.
    #[arg(long = "size", value_name = "TILE=N", value_parser = parse_size, required = true)]
    pub sizes: Vec<(char, usize)>,
    /// Extra protected cell as ROW,COL. Repeatable; '@' and '#' are always protected.
    #[arg(long = "objective", value_name = "ROW,COL", value_parser = parse_pos)]
    pub objectives: Vec<(usize, usize)>,
    /// Undo placements that cut an objective off from '@'.
    #[arg(long)]
    pub safe: bool,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// TOML file with evolution settings; flags override it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub pop: Option<usize>,
    #[arg(long)]
    pub gens: Option<usize>,
    /// Side of the square map.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub objectives: Option<usize>,
    /// Per-cell flip probability.
    #[arg(long)]
    pub mutation: Option<f64>,
    #[arg(long)]
    pub tournament: Option<usize>,
    #[arg(long)]
    pub elitism: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    pub bundle: PathBuf,
    #[command(flatten)]
    pub render: RenderOpts,
}

#[derive(Debug, Args)]
pub struct CoherenceArgs {
    pub bundle: PathBuf,
    #[command(flatten)]
    pub backend: BackendOpts,
}

fn parse_size(s: &str) -> Result<(char, usize), String> {
    let (tile, n) = s.split_once('=').ok_or("expected TILE=N")?;
    let mut chars = tile.chars();
    let (Some(ch), None) = (chars.next(), chars.next()) else {
        return Err(format!("tile must be one character, got {tile:?}"));
    };
    let n = n.trim().parse().map_err(|e| format!("bad size {n:?}: {e}"))?;
    Ok((ch, n))
}

fn parse_pos(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s.split_once(',').ok_or("expected ROW,COL")?;
    let r = r.trim().parse().map_err(|e| format!("bad row {r:?}: {e}"))?;
    let c = c.trim().parse().map_err(|e| format!("bad col {c:?}: {e}"))?;
    Ok((r, c))
}

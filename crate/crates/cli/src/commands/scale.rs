use std::collections::{BTreeMap, BTreeSet};

use anyhow::Result;
use storyforge::map::{
    classify_tiles, parse_grid, Objective, ObjectiveKind, TileGrid, WalkableSet, ANTAGONIST, PROTAGONIST,
};
use storyforge::scaling::{apply_scaling_with, SafeMode, ScalingOptions, ScalingPlan};

use crate::args::{Common, ScaleArgs};
use crate::output::{read, run_dir, usage, CommandResult, Writer};

/// Fenced map text as the model writes it, or bare rows.
fn load_map(text: &str) -> Result<TileGrid> {
    let grid = if text.contains("```") {
        parse_grid(text)?
    } else {
        TileGrid::from_text(text)
    };
    if grid.is_empty() {
        return Err(usage("map file has no rows"));
    }
    grid.ensure_rectangular().map_err(|e| usage(e.to_string()))?;
    Ok(grid)
}

pub fn run(common: &Common, args: &ScaleArgs) -> Result<CommandResult> {
    let grid = load_map(&read(&args.map)?)?;
    let walkable: WalkableSet = args.walkable.chars().collect();

    let sizes: BTreeMap<char, usize> = args.sizes.iter().copied().collect();
    let order: Vec<char> = args.sizes.iter().map(|(c, _)| *c).collect();
    let plan = ScalingPlan::new(order, sizes).map_err(|e| usage(e.to_string()))?;

    let mut objectives = Vec::new();
    for &p in &args.objectives {
        let ch = grid.get(p).ok_or_else(|| {
            usage(format!(
                "objective {p:?} lies outside the {}x{} map",
                grid.rows(),
                grid.cols()
            ))
        })?;
        objectives.push(Objective::new("objective", ObjectiveKind::ChatWithNpc, ch, p));
    }
    for p in grid.positions_of(ANTAGONIST) {
        objectives.push(Objective::new("antagonist", ObjectiveKind::DefeatEnemy, ANTAGONIST, p));
    }
    let targets: Vec<_> = objectives.iter().map(|o| o.position).collect();
    let start = grid.find(PROTAGONIST);
    if let Some(s) = start {
        objectives.push(Objective::new("start", ObjectiveKind::ChatWithNpc, PROTAGONIST, s));
    }

    let classification = classify_tiles(&grid, &walkable, &objectives, &plan.tile_set())?;
    let safe_mode = if args.safe {
        let start = start.ok_or_else(|| usage("--safe needs a '@' on the map"))?;
        Some(SafeMode {
            walkable: walkable.clone(),
            start,
            targets,
        })
    } else {
        None
    };
    let outcome = apply_scaling_with(&grid, &classification, &plan, &ScalingOptions { safe_mode })?;

    let mut out = Writer::new(run_dir(common.out.as_deref(), common.seed.unwrap_or(0))?);
    out.write("scaled.txt", outcome.grid.to_text())?;
    out.write(
        "classification.txt",
        outcome.classification.row_strings().join("\n") + "\n",
    )?;
    let placements = serde_json::json!({
        "placements": outcome.placements,
        "rolled_back": outcome.rolled_back,
    });
    out.write("placements.json", serde_json::to_string_pretty(&placements)? + "\n")?;

    let tiles: BTreeSet<char> = outcome.placements.iter().map(|p| p.tile).collect();
    let summary = format!(
        "{} placements over {} tile kinds, {} rolled back\n",
        outcome.placements.len(),
        tiles.len(),
        outcome.rolled_back.len()
    );
    Ok(out.finish(summary))
}

use anyhow::Result;
use storyforge::evo::{evo_legend, evolve, EvoConfig};
use storyforge::metrics::evaluate_map;

use crate::args::{BaselineArgs, Common};
use crate::output::{load_toml, run_dir, usage, CommandResult, Writer};

pub fn resolve_config(common: &Common, args: &BaselineArgs) -> Result<EvoConfig> {
    let mut c: EvoConfig = match &args.config {
        Some(path) => load_toml(path)?,
        None => EvoConfig::default(),
    };
    if let Some(seed) = common.seed {
        c.rng_seed = seed;
    }
    macro_rules! take {
        ($($flag:ident => $field:ident),*) => {
            $(if let Some(v) = args.$flag { c.$field = v; })*
        };
    }
    take!(
        pop => population_size,
        gens => generations,
        size => size,
        objectives => n_objectives,
        mutation => mutation_rate,
        tournament => tournament_size,
        elitism => elitism_count
    );
    c.validate().map_err(|e| usage(e.to_string()))?;
    Ok(c)
}

pub fn run(common: &Common, args: &BaselineArgs) -> Result<CommandResult> {
    let config = resolve_config(common, args)?;
    let run = evolve(&config)?;
    let best = &run.best;
    let grid = best.to_grid();
    let evaluation = evaluate_map("baseline", &grid, &best.walk_map(), best.start, &best.objectives)?;

    let mut out = Writer::new(run_dir(common.out.as_deref(), config.rng_seed)?);
    out.write("map.txt", grid.to_text())?;
    out.write("legend.txt", evo_legend().render() + "\n")?;
    let mut log = csv::Writer::from_writer(Vec::new());
    for row in &run.log {
        log.serialize(row)?;
    }
    out.write("log.csv", log.into_inner()?)?;
    let report = serde_json::json!({
        "config": config,
        "best_fitness": run.best_fitness,
        "genome": best,
        "evaluation": evaluation,
    });
    out.write("evaluation.json", serde_json::to_string_pretty(&report)? + "\n")?;

    let aspao = evaluation
        .aspao
        .map_or_else(|| "undefined".to_string(), |a| format!("{a:.2}"));
    let summary = format!(
        "seed {}: best fitness {:.3} after {} generations, playability {}, ASPAO {aspao}, UTR {:.2}\n",
        config.rng_seed,
        run.best_fitness,
        config.generations,
        u8::from(evaluation.valid),
        evaluation.utr,
    );
    Ok(out.finish(summary))
}

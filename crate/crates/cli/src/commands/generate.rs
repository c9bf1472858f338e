use std::fs;

use anyhow::{Context, Result};
use storyforge::export::export_block_json;
use storyforge::pipeline::{run_pipeline, PipelineConfig, RecordingBackend};

use crate::args::{Common, GenerateArgs};
use crate::backend;
use crate::output::{load_toml, run_dir, usage, CommandResult, Writer};

/// Config file first, then flags on top.
pub fn resolve_config(common: &Common, args: &GenerateArgs) -> Result<PipelineConfig> {
    let mut c: PipelineConfig = match &args.config {
        Some(path) => load_toml(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        c.rng_seed = seed;
    }
    if let Some(b) = args.backend.backend {
        c.backend = b.into();
    }
    macro_rules! take {
        ($($flag:ident => $field:ident),*) => {
            $(if let Some(v) = args.$flag { c.$field = v; })*
        };
    }
    take!(
        n_objectives => n_objectives,
        min_paragraphs => min_paragraphs,
        max_paragraphs => max_paragraphs,
        max_rounds => max_refinement_rounds,
        iteration_cap => astar_iteration_cap,
        submap_size => submap_size,
        waves => arena_waves,
        items => collect_items,
        height_base => height_base
    );
    if args.no_scaling {
        c.scaling_enabled = false;
    }
    if args.safe_scaling {
        c.safe_scaling = true;
    }
    if args.no_critique {
        c.critique = false;
    }
    c.validate().map_err(|e| usage(e.to_string()))?;
    Ok(c)
}

pub fn run(common: &Common, args: &GenerateArgs) -> Result<CommandResult> {
    let config = resolve_config(common, args)?;
    let backend = backend::open(config.backend, args.backend.fixtures.as_deref(), config.rng_seed)?;
    let recorder = RecordingBackend::new(backend);
    let dir = run_dir(common.out.as_deref(), config.rng_seed)?;
    let mut out = Writer::new(dir);

    let outcome = run_pipeline(&config, &recorder);
    if let Some(path) = &args.record {
        fs::write(path, recorder.to_fixture_json()).with_context(|| format!("writing {}", path.display()))?;
        out.written.push(path.clone());
    }
    let run = match outcome {
        Ok(run) => run,
        Err(failure) => {
            let partial = out.write("trace.jsonl.partial", failure.trace.to_jsonl())?;
            return Err(anyhow::Error::new(failure.error).context(format!(
                "generation failed; partial trace kept at {}",
                partial.display()
            )));
        }
    };

    let bundle = &run.bundle;
    out.write("bundle.json", bundle.to_json())?;
    out.write("blocks.json", export_block_json(&bundle.blocks))?;
    let raster = bundle.render(args.render.style.into(), args.render.cell)?;
    out.write("render.ppm", raster.to_ppm())?;
    out.write("trace.jsonl", run.trace.to_jsonl())?;

    let v = &bundle.validity;
    let summary = format!(
        "{}x{} map, {} objectives, {} sub-maps, {} blocks\n\
         valid before scaling: {} (round {}), after scaling: {}, sub-maps valid: {}\n",
        bundle.grid.rows(),
        bundle.grid.cols(),
        bundle.objectives.len(),
        bundle.submaps.len(),
        bundle.blocks.len(),
        v.pre_scaling,
        v.refinement_rounds,
        v.post_scaling,
        v.submaps,
    );
    Ok(out.finish(summary))
}

use anyhow::{Context, Result};
use storyforge::export::LevelBundle;
use storyforge::pipeline::{reconstructed_similarity, Session};

use crate::args::{CoherenceArgs, Common};
use crate::backend;
use crate::output::{read, run_dir, CommandResult, Writer};

pub fn run(common: &Common, args: &CoherenceArgs) -> Result<CommandResult> {
    let bundle =
        LevelBundle::from_json(&read(&args.bundle)?).with_context(|| format!("parsing {}", args.bundle.display()))?;
    let seed = common.seed.unwrap_or(bundle.config.rng_seed);
    let kind = args.backend.backend.map_or(bundle.config.backend, Into::into);
    let backend = backend::open(kind, args.backend.fixtures.as_deref(), seed)?;

    let mut session = Session::new(backend.as_ref(), bundle.config.max_refinement_rounds);
    let result = reconstructed_similarity(&mut session, &bundle);
    let mut out = Writer::new(run_dir(common.out.as_deref(), seed)?);
    let trace = session.into_trace();
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            out.write("trace.jsonl.partial", trace.to_jsonl())?;
            return Err(e.into());
        }
    };
    out.write("trace.jsonl", trace.to_jsonl())?;
    out.write("reconstruction.txt", format!("{}\n", result.story.trim_end()))?;
    let report = serde_json::json!({
        "bundle": args.bundle.display().to_string(),
        "similarity": result.similarity,
        "reconstruction": result.story,
    });
    out.write("coherence.json", serde_json::to_string_pretty(&report)? + "\n")?;
    Ok(out.finish(format!("cosine similarity {:.4}\n", result.similarity)))
}

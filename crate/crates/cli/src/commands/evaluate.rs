use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use storyforge::export::LevelBundle;
use storyforge::metrics::CorpusReport;
use walkdir::WalkDir;

use crate::args::{Common, EvaluateArgs};
use crate::output::{read, run_dir, usage, CommandResult, Writer};

fn is_bundle(path: &Path) -> bool {
    path.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n == "bundle.json" || n.ends_with(".bundle.json"))
}

/// Bundle files under `root`, in path order.
pub fn find_bundles(root: &Path) -> Vec<PathBuf> {
    WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file() && is_bundle(e.path()))
        .map(|e| e.into_path())
        .collect()
}

pub fn run(common: &Common, args: &EvaluateArgs) -> Result<CommandResult> {
    if !args.corpus.is_dir() {
        return Err(usage(format!("{} is not a directory", args.corpus.display())));
    }
    let paths = find_bundles(&args.corpus);
    if paths.is_empty() {
        bail!("EmptyCorpus: no bundle.json files under {}", args.corpus.display());
    }
    let mut evaluations = Vec::with_capacity(paths.len());
    for path in &paths {
        let bundle = LevelBundle::from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
        let id = path.strip_prefix(&args.corpus).unwrap_or(path).display().to_string();
        evaluations.push(bundle.evaluate(id)?);
    }
    let report = CorpusReport::from_evaluations(evaluations)?;
    let table = report.to_table();

    let mut out = Writer::new(run_dir(common.out.as_deref(), common.seed.unwrap_or(0))?);
    out.write("report.json", serde_json::to_string_pretty(&report)? + "\n")?;
    out.write("report.txt", &table)?;
    Ok(out.finish(table))
}

//! Runs the pipeline against a scripted backend and writes the exchanges as a
//! replay fixture.
//!
//! ```text
//! cargo run -p storyforge-core --example record_fixture -- fixtures/forest-01.script.json fixtures/forest-01.json
//! ```

use std::{env, fs, process};

use storyforge::pipeline::{run_pipeline, PipelineConfig, RecordingBackend, ScriptedBackend};

fn main() {
    let args: Vec<String> = env::args().skip(1).collect();
    let [script, out] = args.as_slice() else {
        eprintln!("usage: record_fixture SCRIPT.json OUT.json");
        process::exit(2);
    };
    let text = fs::read_to_string(script).unwrap_or_else(|e| {
        eprintln!("{script}: {e}");
        process::exit(1);
    });
    let backend = ScriptedBackend::from_json(&text).unwrap_or_else(|e| {
        eprintln!("{script}: {e}");
        process::exit(1);
    });
    let recorder = RecordingBackend::new(backend);
    match run_pipeline(&PipelineConfig::default(), &recorder) {
        Ok(run) => {
            let v = &run.bundle.validity;
            println!(
                "{} exchanges, valid before scaling {}, after {}",
                run.trace.len(),
                v.pre_scaling,
                v.post_scaling
            );
        }
        Err(failure) => {
            eprintln!("pipeline failed: {}", failure.error);
            process::exit(1);
        }
    }
    fs::write(out, recorder.to_fixture_json()).unwrap_or_else(|e| {
        eprintln!("{out}: {e}");
        process::exit(1);
    });
}

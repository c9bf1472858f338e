//! `storyforge` command-line entry point.
//!
//! Exit codes: 0 on success, 1 when the work itself fails (pipeline error,
//! empty corpus, unreadable input), 2 on usage errors (bad flags, missing
//! API key, missing fixtures).

mod args;
mod backend;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use output::UsageError;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => commands::generate::run(&cli.common, a),
        Command::Evaluate(a) => commands::evaluate::run(&cli.common, a),
        Command::Scale(a) => commands::scale::run(&cli.common, a),
        Command::Baseline(a) => commands::baseline::run(&cli.common, a),
        Command::Render(a) => commands::render::run(&cli.common, a),
        Command::Coherence(a) => commands::coherence::run(&cli.common, a),
    };
    match result {
        Ok(done) => {
            done.print();
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

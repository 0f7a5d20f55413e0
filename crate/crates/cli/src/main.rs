//! `robin` — binarization of images with nonuniform background and heavy
//! noise, plus dataset evaluation and synthetic-suite generation.

mod commands;
mod error;
mod manifest;
mod opts;
mod report;

use clap::Parser;

use error::CliError;
use opts::{Cli, Command};

fn main() {
    // RB_LOG controls the log level (e.g. RB_LOG=debug); silent by default.
    env_logger::Builder::from_env(env_logger::Env::new().filter("RB_LOG")).init();

    let cli = Cli::parse();
    let result: Result<(), CliError> = match cli.command {
        Command::Binarize(args) => commands::binarize::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Synth(args) => commands::synth::run(args),
        Command::Pair(args) => commands::pair::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

mod cli;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;

use cli::{Cli, Command};
use config::FileLayer;
use error::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    let mut file = FileLayer::load(cli.config.as_deref())?;
    let threads = file.take::<usize>("threads", cli.threads)?;
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::usage("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::runtime(e.to_string()))?;
    }
    match cli.command {
        Command::PenTable(a) => commands::pen_table(a, file),
        Command::Estimate(a) => commands::estimate(a, file),
        Command::Simulate(a) => commands::simulate(a, file),
        Command::Prop1(a) => commands::prop1(a, file),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ggm: {e}");
            ExitCode::from(e.code)
        }
    }
}

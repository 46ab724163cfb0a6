mod args;
mod commands;
mod failure;
mod io;
mod mapfile;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use failure::{Failure, EXIT_INTERNAL};

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Discover(a) => commands::discover(a),
        Command::Anonymize(a) => commands::anonymize(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Attack(a) => commands::attack(a),
        Command::Generate(a) => commands::generate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("privmine: {f}");
            ExitCode::from(f.code as u8)
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL as u8),
    }
}

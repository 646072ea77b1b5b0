mod args;
mod commands;
mod output;
mod svg;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Exit status for usage and configuration errors.
const EXIT_USAGE: u8 = 2;

fn run(cli: &Cli) -> anyhow::Result<i32> {
    let registry = commands::load_registry(cli.registry.as_deref())?;
    match &cli.command {
        Command::Predict(a) => commands::predict(a, &registry),
        Command::Optimize(a) => commands::optimize(a, &registry, cli.registry.as_deref()),
        Command::Pareto(a) => commands::pareto(a),
        Command::Validate(a) => commands::validate(a, &registry),
        Command::Export(a) => commands::export(a, &registry),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

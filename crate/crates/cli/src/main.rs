//! `gfdm` command-line driver.

mod args;
mod commands;
mod config;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};
use commands::CliError;

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    match run(&argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.machine_line());
            ExitCode::FAILURE
        }
    }
}

fn run(argv: &[OsString]) -> Result<(), CliError> {
    let root = Cli::command();
    let first = root.clone().get_matches_from(argv);
    let (name, sub_matches) = first
        .subcommand()
        .expect("a subcommand is required by the parser");
    let sub = root
        .find_subcommand(name)
        .expect("parsed subcommands exist")
        .clone();
    let cli = Cli::from_arg_matches(&first).unwrap_or_else(|e| e.exit());
    let config_path = cli.command.common().config.clone();
    let (cli, matches) = match config_path {
        None => (cli, sub_matches.clone()),
        Some(path) => {
            let entries = config::read(&path)?;
            let merged = config::merge(argv, name, &sub, sub_matches, &entries)?;
            let m = root.clone().get_matches_from(&merged);
            let cli = Cli::from_arg_matches(&m).unwrap_or_else(|e| e.exit());
            let sm = m.subcommand().expect("subcommand").1.clone();
            (cli, sm)
        }
    };
    init_logging(cli.verbose);
    let echo = config::echo(&sub, &matches);
    match &cli.command {
        Command::Generate(a) => commands::generate(a, &echo),
        Command::StencilDump(a) => commands::stencil_dump(a, &echo),
        Command::Bench(a) => commands::bench(a, &echo),
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

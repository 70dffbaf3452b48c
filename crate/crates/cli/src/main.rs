use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod config;
mod error;
mod output;
mod plot;
mod report;

use args::{Cli, Command};
use error::CliError;

/// Parses the command line, then again with the config file's section
/// spliced in ahead of the user's own flags.
fn parse(raw: Vec<OsString>) -> Result<Cli, CliError> {
    let cli = Cli::try_parse_from(&raw).unwrap_or_else(|e| e.exit());
    let Some(path) = cli.command.common().config.clone() else {
        return Ok(cli);
    };
    let user = &raw[2..];
    let injected = config::injected_args(&path, cli.command.name(), user)?;
    log::debug!("from {}: {:?}", path.display(), injected);
    let argv: Vec<OsString> = raw[..2].iter().cloned().chain(injected).chain(user.iter().cloned()).collect();
    Ok(Cli::try_parse_from(argv).unwrap_or_else(|e| e.exit()))
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Bound(a) => commands::bound(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::ValidatePhi(a) => commands::validate_phi(a),
        Command::PlotPhi(a) => commands::plot_phi(a),
        Command::Report(a) => report::report(a),
    }
}

fn run() -> Result<(), CliError> {
    let cli = parse(std::env::args_os().collect())?;
    match cli.command.common().threads {
        None => dispatch(&cli.command),
        Some(0) => Err(CliError::Usage("--threads must be >= 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            pool.install(|| dispatch(&cli.command))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("omp-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

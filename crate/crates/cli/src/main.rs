mod args;
mod commands;
mod error;
mod runfile;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{exit, CliResult};

fn run() -> CliResult<()> {
    let argv = runfile::expand(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match &cli.command {
        Command::Exact(a) => commands::exact(a),
        Command::Mcmc(a) => commands::mcmc(a),
        Command::Adiabatic(a) => commands::adiabatic(a),
        Command::Sample(a) => commands::sample(a),
        Command::Analyze(a) => commands::analyze(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("z2q: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

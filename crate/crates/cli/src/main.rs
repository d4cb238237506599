mod commands;
mod config;
mod error;
mod report;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, RunConfig};
use error::CliError;

fn run() -> Result<(), CliError> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => {
            let text = e.render().to_string();
            return Err(CliError::Usage(text.trim_start_matches("error: ").trim_end().to_string()));
        }
    };
    let cfg = RunConfig::resolve(cli)?;
    let report = commands::run(&cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    report.write(&cfg)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

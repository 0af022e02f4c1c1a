mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use crate::commands::{dispatch, Summary};
use crate::config::{parse_config, Cli, Command};
use crate::error::CliError;

fn execute(cmd: &Command) -> Result<(&'static str, Summary), CliError> {
    match cmd {
        Command::Tables(a) => Ok(("tables", dispatch!(a.precision, tables_cmd, a)?)),
        Command::Solve(a) => Ok(("solve", dispatch!(a.precision, solve_cmd, a)?)),
        Command::Stability(a) => Ok(("stability", dispatch!(a.precision, stability_cmd, a)?)),
        Command::Converge(a) => Ok(("converge", dispatch!(a.precision, converge_cmd, a)?)),
        Command::Problems(_) => Ok(("problems", commands::problems_list()?)),
        Command::Run(a) => {
            let text = std::fs::read_to_string(&a.config).map_err(|e| CliError::Io {
                context: format!("reading {}", a.config.display()),
                source: e,
            })?;
            execute(&parse_config(&text)?)
        }
    }
}

use commands::{
    converge as converge_cmd, solve as solve_cmd, stability as stability_cmd, tables as tables_cmd,
};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match execute(&cli.command) {
        Ok((name, summary)) => {
            if !summary.fields.is_empty() {
                eprintln!("{}", summary.line(name, started));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

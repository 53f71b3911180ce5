//! Batch front end for the `flatflow` calculations.
//!
//! Each invocation runs one command and writes a CSV table (header plus data
//! rows) or a single JSON document holding the configuration, the column
//! order and the rows. Exit status: 0 success, 2 usage, 3 infeasible flow,
//! 4 I/O failure.

mod args;
mod commands;
pub mod config;
mod error;
pub mod table;

use std::ffi::OsString;
use std::io::{Read, Write};

use clap::Parser;

pub use args::Cli;
pub use commands::execute;
pub use config::{Command, OutputFormat, RunConfig, SiBase, SweepSpec, SweepVar};
pub use error::CliError;
pub use table::Table;

/// Runs one configuration, writing the report to `out`.
pub fn run(config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let table = execute(config)?;
    table::write_table(&table, config, out)
}

/// Reads a configuration back from JSON: either a bare configuration or a
/// report produced with `--format json`.
pub fn config_from_json(text: &str) -> Result<RunConfig, CliError> {
    let doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::usage(format!("invalid JSON: {e}")))?;
    let config = match doc.get("config") {
        Some(c) => c.clone(),
        None => doc,
    };
    serde_json::from_value(config)
        .map_err(|e| CliError::usage(format!("invalid configuration: {e}")))
}

fn read_input(path: &std::path::Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        Ok(text)
    } else {
        Ok(std::fs::read_to_string(path)?)
    }
}

/// Parses command-line arguments and runs them; returns the exit status.
pub fn run_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return 2;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };

    let result = match &cli.command {
        args::Cmd::Replay { input } => read_input(input)
            .and_then(|text| config_from_json(&text))
            .and_then(|c| run(&c, out)),
        _ => match cli.into_config() {
            Some(config) => run(&config, out),
            None => unreachable!("only replay lacks a configuration"),
        },
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "flowcli: {e}");
            e.exit_code()
        }
    }
}

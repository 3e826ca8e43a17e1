//! Experiment runner behind the `randcorr` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use config::{Cli, ExperimentConfig};
pub use error::CliError;
pub use output::Report;

/// Resolves the configuration, runs the subcommand and writes its output.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let config = ExperimentConfig::resolve(cli)?;
    let text = commands::run(&config)?.render(config.format);
    match &config.output {
        Some(path) => output::write_atomic(path, &text),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("writing standard output: {e}"))),
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("randcorr: {e}");
            e.exit_code()
        }
    }
}

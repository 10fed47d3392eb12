//! Command-line front end: instance generation, constructions, certificates and experiment runs.

pub mod args;
pub mod bundle;
pub mod commands;
pub mod error;
pub mod experiment;
pub mod io;

pub use args::Cli;
pub use commands::{execute, Outcome};
pub use error::{CliError, Result};

/// Parses nothing; runs an already parsed command line and writes its output.
pub fn run(cli: Cli) -> Result<bool> {
    let outcome = execute(cli.command, &cli.global)?;
    io::emit(&outcome.output, cli.global.format, cli.global.out.as_deref())?;
    Ok(outcome.ok)
}

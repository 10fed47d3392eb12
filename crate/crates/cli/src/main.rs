use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    match metriq_cli::run(metriq_cli::Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

use std::process::ExitCode;

use clap::Parser;
use mintube_cli::cli::Cli;
use mintube_cli::commands::{self, Outcome};

fn main() -> ExitCode {
    let args = Cli::parse();
    match commands::run(args) {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => {
            eprintln!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

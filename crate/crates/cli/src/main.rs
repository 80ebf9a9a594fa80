use std::process::ExitCode;

use clap::Parser;
use qvam_cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qvam: {e}");
            ExitCode::FAILURE
        }
    }
}

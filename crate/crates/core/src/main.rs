use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    olt::cli::run(olt::cli::Cli::parse())
}

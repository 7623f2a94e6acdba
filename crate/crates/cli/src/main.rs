use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    ExitCode::from(nla_cli::run(nla_cli::Cli::parse()))
}

//! Command-line front end: figure data as CSV/JSON, Monte-Carlo Cramér-Rao
//! experiments and the oracle self-check.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod format;

use std::io::Write;

pub use args::Cli;
pub use commands::{execute, Report};
pub use config::RunConfig;
pub use error::CliError;

/// Writes `body` to `--out` or standard output.
pub fn emit(config: &RunConfig, body: &str) -> Result<(), CliError> {
    match &config.out {
        Some(path) => std::fs::write(path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes()).and_then(|_| stdout.flush()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> u8 {
    let fail = |e: CliError| {
        eprintln!("{}", e.to_json());
        e.exit_code()
    };
    let config = match cli.into_config() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let report = match execute(&config) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    if let Err(e) = emit(&config, &report.body) {
        return fail(e);
    }
    for d in &report.diagnostics {
        eprintln!("{d}");
    }
    report.error.map_or(0, fail)
}

//! `crackfield` command line. Errors go to stderr as one JSON object
//! `{kind, module, message}`; the exit code is 1 for analysis errors, 2 for
//! configuration errors and 3 for I/O errors. `CRACKFIELD_LOG` sets the log
//! level (default `warn`).

#![allow(clippy::neg_cmp_op_on_partial_ord)]
mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CRACKFIELD_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = args::Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::to_string(&e.payload()).expect("error serializes")
            );
            ExitCode::from(e.exit_code())
        }
    }
}

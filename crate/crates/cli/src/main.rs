//! `ioht`: generate data, run the filter and privacy experiments, and
//! simulate the full sensor-to-edge pipeline.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 internal invariant failure.

use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;

use args::Cli;

/// Argument combinations clap cannot express; reported with exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.chain().find_map(|e| e.downcast_ref::<ioht_core::Error>()) {
        Some(e) if e.is_internal() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

//! Library side of the `orthosub` binary, so tests can drive commands
//! without spawning a process.

pub mod args;
mod commands;

use std::ffi::OsString;
use std::fmt;

use clap::Parser;

use crate::args::{Cli, ConfigOverride};

/// Everything checked passed.
pub const EXIT_OK: i32 = 0;
/// Bad flags, failed preconditions, refused requests.
pub const EXIT_USAGE: i32 = 2;
/// Some quantum run or amplitude check missed its exact prediction.
pub const EXIT_EXACTNESS: i32 = 3;
/// An empirical interval lies above a classical ceiling.
pub const EXIT_BOUND: i32 = 4;
/// Formula and enumeration counts disagree.
pub const EXIT_COUNT_MISMATCH: i32 = 5;
/// Unreadable or malformed input file, or unwritable output.
pub const EXIT_INPUT: i32 = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            let (stdout, stderr) = if e.use_stderr() {
                (String::new(), text)
            } else {
                (text, String::new())
            };
            return Outcome { code, stdout, stderr };
        }
    };
    match execute(cli) {
        Ok(outcome) => outcome,
        Err(e) => Outcome {
            code: e.code,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

pub fn execute(mut cli: Cli) -> Result<Outcome, CliError> {
    if let Some(path) = cli.command.common().config.clone() {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        let overrides: ConfigOverride = serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("bad config {}: {e}", path.display())))?;
        overrides.apply(&mut cli.command);
    }
    let common = cli.command.common().clone();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.workers)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start {} workers: {e}", common.workers)))?;
    let report = pool.install(|| commands::dispatch(&cli.command))?;
    let mut stdout = report.body;
    if let Some(path) = &common.out {
        std::fs::write(path, &stdout)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
        stdout = String::new();
    }
    Ok(Outcome {
        code: report.code,
        stdout,
        stderr: String::new(),
    })
}

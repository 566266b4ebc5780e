//! Command-line front end for the profile-generation pipeline.
//!
//! Exit codes: 0 on success, 1 for usage and validation errors, 2 for
//! failures while running.

pub mod args;
mod commands;
pub mod server;

use std::ffi::OsString;
use std::fmt;

use clap::Parser;

pub use args::{Cli, Command, CACHE_ENV};

#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or configuration; nothing was run.
    Validation(String),
    /// Something failed while running.
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "invalid arguments: {m}"),
            Failure::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<pgtask_core::Error> for Failure {
    fn from(e: pgtask_core::Error) -> Self {
        match e {
            pgtask_core::Error::InvalidConfig(_) => Failure::Validation(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

pub fn execute(command: &Command) -> Result<(), Failure> {
    commands::execute(command)
}

/// Parses `argv` and runs the subcommand, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("pgtask {}: {f}", cli.command.name());
            f.exit_code()
        }
    }
}

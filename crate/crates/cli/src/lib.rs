//! Experiment driver behind the `flexsim` binary.
//!
//! Every command writes a `#`-prefixed metadata block (artifact version,
//! seed, resolved config) followed by CSV, or BPG text for `gen`.
//! Exit codes: 0 success, 1 usage, 2 invariant violation, 3 I/O.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
pub use error::{CliError, Result};

pub fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen(a) => commands::gen(a),
        Command::Check(a) => commands::check(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Steady(a) => commands::steady(a),
        Command::Coupled(a) => commands::coupled(a),
        Command::Ode(a) => commands::ode(a),
        Command::Compare(a) => commands::compare(a),
        Command::Reproduce(a) => commands::reproduce(a),
    }
}

/// Parse `argv`, run, and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("flexsim: {e}");
            e.exit_code()
        }
    }
}

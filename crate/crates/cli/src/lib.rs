//! Library side of the `polarlex` command-line tool. Each subcommand is a
//! plain function so it can be driven from tests without spawning a process.

pub mod commands;
pub mod config;
pub mod input;
pub mod manifest;

use std::fmt;

/// Bad flags, config keys or option combinations (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

/// Unreadable, malformed or inconsistent input data (exit code 3).
#[derive(Debug)]
pub struct DataError(pub String);

/// Numerical failure such as non-convergence under `--strict` (exit code 4).
#[derive(Debug)]
pub struct NumericalError(pub String);

macro_rules! message_error {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
        impl std::error::Error for $t {}
    )*};
}
message_error!(UsageError, DataError, NumericalError);

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Exit status for a failed command, from the first classifiable error in
/// the chain.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if cause.is::<NumericalError>() {
            return EXIT_NUMERICAL;
        }
        if cause.is::<DataError>() {
            return EXIT_DATA;
        }
        if let Some(e) = cause.downcast_ref::<polarlex::Error>() {
            return match e {
                polarlex::Error::Config(_) => EXIT_USAGE,
                polarlex::Error::RankDeficient(_) | polarlex::Error::Estimation(_) => EXIT_NUMERICAL,
                _ => EXIT_DATA,
            };
        }
    }
    EXIT_DATA
}

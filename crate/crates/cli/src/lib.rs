//! Command-line front end for the ipvote toolkit.
//!
//! Every subcommand writes its data or report to the given writer (stdout in
//! the binary) and its files atomically inside the workspace.

pub mod args;
pub mod commands;
pub mod report;
pub mod workspace;

pub use args::Cli;
pub use commands::{run, Context};

/// Process exit status for a failed command: 2 for I/O and parse failures,
/// 1 for everything else (validation, training, bad flags combinations).
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ipvote_core::Error>() {
            return if e.is_io_or_parse() { 2 } else { 1 };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

//! Command-line front end for `persistlab-core`.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 verification failure.

pub mod args;
pub mod commands;
pub mod error;
pub mod record;
pub mod suite;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::Cli;
pub use error::{CliError, EXIT_OK, EXIT_USAGE, EXIT_VERIFY};
pub use record::{Payload, ResultRecord};

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    use args::Command::*;
    match &cli.command {
        Exact(a) => commands::cmd_exact(a, out),
        Mc(a) => commands::cmd_mc(a, out),
        Fit(a) => commands::cmd_fit(a, out),
        Bounds(a) => commands::cmd_bounds(a, out),
        Decay(a) => commands::cmd_decay(a, out),
        Ibm(a) => commands::cmd_ibm(a, out),
        Suite(a) => commands::cmd_suite(a, out),
    }
}

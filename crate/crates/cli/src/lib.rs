//! Command-line driver: reports go to stdout as JSON, diagnostics to stderr.

pub mod args;
pub mod commands;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;

pub use args::{Algorithm, Cli, Command};
pub use error::{exit, CliError};

/// Environment variable holding the log filter.
pub const LOG_ENV: &str = "CONCEPT_ALIGN_LOG";

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> error::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_stdout(out, text.as_bytes())
}

/// A closed pipe (`| head`) is not an error worth reporting.
fn write_stdout(out: &mut dyn Write, bytes: &[u8]) -> error::Result<()> {
    match out.write_all(bytes).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::io("stdout", e)),
        _ => Ok(()),
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> error::Result<u8> {
    match &cli.command {
        Command::Explain(a) => {
            let (report, code) = commands::explain(a)?;
            emit(out, &report)?;
            Ok(code)
        }
        Command::Gen(a) => emit(out, &commands::gen(a)?).map(|_| exit::OK),
        Command::Compare(a) => emit(out, &commands::compare(a)?).map(|_| exit::OK),
        Command::Stats(a) => emit(out, &commands::stats(a)?).map(|_| exit::OK),
        Command::Bench(a) => {
            let report = commands::bench(a)?;
            if a.table {
                write_stdout(out, commands::bench_table(&report).as_bytes())?;
            } else {
                emit(out, &report)?;
            }
            Ok(exit::OK)
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => exit::OK,
                _ => exit::USAGE,
            };
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

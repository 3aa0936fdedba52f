//! Command-line orchestration: WAV ingestion, the detect / denoise / spectra /
//! synth / eval subcommands, and CSV/JSON/WAV artifact output with config
//! provenance.
//!
//! Exit codes: 0 success, 1 processing error, 2 usage or config error.

pub mod args;
pub mod commands;
pub mod config;
pub mod provenance;

use clap::Parser;

use crate::error::Error;

/// Parse arguments and dispatch; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the error path with status 0
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };

    let result = match &cli.command {
        args::Command::Detect(a) => commands::cmd_detect(a),
        args::Command::Denoise(a) => commands::cmd_denoise(a),
        args::Command::Spectra(a) => commands::cmd_spectra(a),
        args::Command::Synth(a) => commands::cmd_synth(a),
        args::Command::Eval(a) => commands::cmd_eval(a),
    };

    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            match e {
                Error::Config(_) => 2,
                _ => 1,
            }
        }
    }
}

//! `spotvol` command-line interface.
//!
//! Exit codes: 0 on success, 1 when the library rejects the data (domain,
//! regime, estimation errors), 2 on usage errors. Failures are reported on
//! stderr as one JSON line `{"code": ..., "message": ...}`.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

/// Error carrying the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: String,
    pub message: String,
    pub status: u8,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: "usage".into(), message: message.into(), status: 2 }
    }
}

impl From<spotvol::Error> for Failure {
    fn from(e: spotvol::Error) -> Self {
        let status = match e {
            spotvol::Error::Parameter(_) => 2,
            _ => 1,
        };
        Self { code: e.code().into(), message: e.to_string(), status }
    }
}

fn report(f: &Failure) {
    let line = serde_json::json!({ "code": f.code, "message": f.message });
    eprintln!("{line}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            report(&Failure::usage(e.render().to_string().trim_end()));
            return ExitCode::from(2);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report(&f);
            ExitCode::from(f.status)
        }
    }
}

//! Batch front-end: runs the detectors on a fixture or a system file and
//! writes a JSON report plus CSV plot data.

pub mod commands;
pub mod config;
pub mod report;
pub mod verify;

use std::io::Write;
use std::path::Path;

use capdyn::sysdef::SysdefError;
use thiserror::Error;

pub use commands::{run_command, Outcome};
pub use config::{Command, RunConfig, Source};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {error}")]
    Parse { path: String, error: SysdefError },
    #[error("{path}: {error}")]
    Io { path: String, error: String },
    #[error(transparent)]
    Core(#[from] capdyn::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if !matches!(e, capdyn::Error::InvalidArgument(_)) => 1,
            _ => 2,
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        error: e.to_string(),
    })
}

fn emit(config: &RunConfig, outcome: &Outcome, out: &mut dyn Write) -> Result<(), CliError> {
    match &config.out {
        Some(path) => {
            write_file(path, &outcome.json)?;
            for csv in &outcome.csv {
                write_file(&csv.path_for(path), &csv.body)?;
            }
        }
        None => out.write_all(outcome.json.as_bytes()).map_err(|e| CliError::Io {
            path: "<stdout>".into(),
            error: e.to_string(),
        })?,
    }
    Ok(())
}

/// Run one command and return the process exit code.
pub fn execute(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = run_command(config).and_then(|outcome| {
        emit(config, &outcome, out)?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) => {
            for w in &outcome.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            outcome.exit
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Replay every witness in the report at `path`; nonzero on any mismatch.
pub fn execute_verify(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match verify::verify_report(path) {
        Ok(replays) => {
            let mut failed = 0;
            for r in &replays {
                let line = match &r.outcome {
                    Ok(d) => format!("{} discrepancy {d:e}", r.location),
                    Err(msg) => format!("{} failed: {msg}", r.location),
                };
                let mark = if r.passed() { "ok" } else { "MISMATCH" };
                let _ = writeln!(out, "{mark} {line}");
                failed += usize::from(!r.passed());
            }
            let _ = writeln!(out, "{} witnesses replayed, {failed} mismatched", replays.len());
            i32::from(failed > 0)
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

//! Reference fixtures and user-defined systems.

pub mod expr;
pub mod file;
pub mod fixtures;

use thiserror::Error;

pub use expr::{parse_expr, Expr};
pub use file::{parse_system, MapExpr, Mode, SystemDefinition};
pub use fixtures::{fixture, Detector, FixtureDefaults, FixtureDescriptor};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SysdefError {
    #[error("line {line}, column {column}: {message}")]
    Lex {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("forward and inverse do not round-trip: error {error:e} at ({}, {})", point[0], point[1])]
    RoundTrip { point: [f64; 2], error: f64 },
}

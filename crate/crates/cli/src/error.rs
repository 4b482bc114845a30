//! One error type for the whole binary; every variant maps to exit code 1.

use std::fmt;
use std::io;
use std::path::Path;

use pmcflow::analysis::AnalysisError;
use pmcflow::flow::FlowError;
use pmcflow::geometry::GeometryError;

#[derive(Debug)]
pub enum CliError {
    /// every semantic problem found in one pass, as (field path, message)
    Config { issues: Vec<(String, String)> },
    Io { message: String },
    Flow(FlowError),
    Analysis(AnalysisError),
    Geometry(GeometryError),
    /// the run finished and its artifacts are on disk, but the outcome is a
    /// failure (non-convergence, failed audit, failed checks)
    RunFailed(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { issues } => {
                writeln!(
                    out,
                    "configuration has {} problem{}:",
                    issues.len(),
                    if issues.len() == 1 { "" } else { "s" }
                )?;
                for (path, message) in issues {
                    writeln!(out, "  - {path}: {message}")?;
                }
                Ok(())
            }
            CliError::Io { message } => write!(out, "IoError: {message}"),
            CliError::Flow(err) => write!(out, "{err}"),
            CliError::Analysis(err) => write!(out, "{err}"),
            CliError::Geometry(err) => write!(out, "{err}"),
            CliError::RunFailed(message) => write!(out, "{message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<FlowError> for CliError {
    fn from(err: FlowError) -> Self {
        CliError::Flow(err)
    }
}

impl From<AnalysisError> for CliError {
    fn from(err: AnalysisError) -> Self {
        CliError::Analysis(err)
    }
}

impl From<GeometryError> for CliError {
    fn from(err: GeometryError) -> Self {
        CliError::Geometry(err)
    }
}

pub fn io_error(path: &Path, doing: &str, err: io::Error) -> CliError {
    CliError::Io {
        message: format!("{doing} {}: {err}", path.display()),
    }
}

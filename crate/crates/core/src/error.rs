use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("symmetry mismatch: {0}")]
    SymmetryMismatch(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("parse error in {path} at line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("integration failure: {0}")]
    IntegrationFailure(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("rejected boundary: {0}")]
    RejectedBoundary(String),
    #[error("weld error: {0}")]
    Weld(String),
    #[error("mesh quality error: {0}")]
    MeshQuality(String),
    #[error("not converged after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("mesh degeneration: {0}")]
    Degeneration(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("classification unavailable: {0}")]
    ClassificationUnavailable(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("flow error at t={time}: {msg}")]
    Flow { time: f64, msg: String },
    #[error("homotopy error at t={time}: {msg}")]
    Homotopy { time: f64, msg: String },
    #[error("reconstruction error: {0}")]
    Reconstruction(String),
    #[error("degree unresolved: value {value} is {distance} from the nearest integer")]
    DegreeUnresolved { value: f64, distance: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Sample count or component count does not match the grid.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Two fields live on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A homogeneous operator was applied to a field with a nonzero mean in strict mode.
    #[error("singular operator: {op} requires a mean-free field (mean magnitude {mean:.3e})")]
    SingularOperator { op: &'static str, mean: f64 },

    /// A scalar argument is outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// Density reached the vacuum region.
    #[error("vacuum: density minimum {min_density:.6e} is not positive")]
    Vacuum { min_density: f64 },

    /// Quadrature did not reach the requested tolerance.
    #[error("quadrature tolerance not met: Richardson estimate {estimate:.3e} > tol {tol:.3e}")]
    QuadratureTolerance { estimate: f64, tol: f64 },

    /// A parameter set violates its admissibility constraints.
    #[error("constraint violation: {}", failed.join("; "))]
    Constraints { failed: Vec<String> },

    /// Picard iteration failed to contract.
    #[error("solver diverged: contraction factor >= 1 for {consecutive} consecutive iterations (last distance {last_distance:.3e})")]
    Diverged {
        consecutive: usize,
        last_distance: f64,
    },

    /// Not enough samples for the requested operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Configuration file error with a line number.
    #[error("config error (line {line}): {message}")]
    Config { line: usize, message: String },

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(line: usize, msg: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: msg.into(),
        }
    }
}

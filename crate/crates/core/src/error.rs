use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The iteration budget ran out before the relative residual fell below
    /// the tolerance.
    #[error(
        "solver did not converge at node {node} after {iterations} iterations (residual {residual:.3e})"
    )]
    NonConvergence {
        node: Complex64,
        iterations: usize,
        residual: f64,
    },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("series level {0} requested before level {1} was computed")]
    MissingLevel(usize, usize),

    #[error("derivation mismatch: {0}")]
    Derivation(String),
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    MeshInvalid(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("geometry error in cell {cell}: {message}")]
    Geometry { cell: usize, message: String },

    #[error("unsupported capability: {0}")]
    Capability(String),

    #[error("coefficient is not uniformly positive definite in cell {cell}: smallest eigenvalue {eigenvalue:.3e} below bound {bound:.3e}")]
    Coefficient {
        cell: usize,
        eigenvalue: f64,
        bound: f64,
    },

    #[error("layout mismatch: expected {expected} coefficients, got {actual}")]
    LayoutMismatch { expected: usize, actual: usize },

    #[error("solver did not converge after {iterations} iterations (best relative residual {best_residual:.3e})")]
    NonConvergence {
        iterations: usize,
        best_residual: f64,
    },

    #[error("singular system (likely an assembly bug): {0}")]
    SingularSystem(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

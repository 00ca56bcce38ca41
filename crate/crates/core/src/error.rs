use thiserror::Error;

/// Errors raised by the meshing, discretization, solver and optimization layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("meshing failed: {0}")]
    Meshing(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("cell {cell} inverted (signed area {area:e})")]
    CellInversion { cell: usize, area: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("conflicting Dirichlet values at node {node}: {first} vs {second}")]
    ConflictingDirichlet { node: usize, first: f64, second: f64 },

    #[error("linear solver stopped after {iterations} iterations at relative residual {residual:e}")]
    LinearSolver { iterations: usize, residual: f64 },

    #[error("{solver} did not converge within {iterations} iterations ({detail})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        detail: String,
    },

    #[error("point ({x}, {y}) lies outside the mesh")]
    PointOutside { x: f64, y: f64 },

    #[error("size mismatch: {0}")]
    Mismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

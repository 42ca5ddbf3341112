use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Cayley transform is singular at this point ({0})")]
    CayleyPole(String),

    #[error("invalid Cayley shift: {0}")]
    InvalidShift(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("degenerate square-root branch: Im beta = 0 at mode {mode}")]
    DegenerateBranch { mode: i64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid discretization: {0}")]
    Grid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

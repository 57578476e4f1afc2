use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |A - A^H| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid density matrix: {quantity} = {value:e}")]
    InvalidState { quantity: &'static str, value: f64 },

    #[error("invalid subsystem id {0} (expected 0 for A or 1 for B)")]
    InvalidSubsystem(u32),

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("matrix is not orthogonal (max |O O^T - I| = {deviation:e})")]
    NotOrthogonal { deviation: f64 },

    #[error("(d={d}, N={n}, M={m}) is not informationally complete: (M-1)N+1 != d^2")]
    NotInformationallyComplete { d: usize, n: usize, m: usize },

    #[error("{name} = {value} outside admissible range ({low}, {high}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        low: f64,
        high: f64,
    },

    #[error("POVM element {index} has minimum eigenvalue {min_eigenvalue:e} at x = {x}")]
    PositivityViolation {
        index: usize,
        min_eigenvalue: f64,
        x: f64,
    },

    #[error("state is not in the interior of the state space (min eigenvalue {min_eigenvalue:e})")]
    NotInterior { min_eigenvalue: f64 },

    #[error("hit-and-run direction is zero")]
    ZeroDirection,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical decomposition failed: {0}")]
    Decomposition(&'static str),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Decomposition(_) | Error::ZeroDirection)
    }
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Array or matrix dimensions do not fit together.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A caller-supplied argument is outside its allowed range.
    #[error("invalid input: {0}")]
    Input(String),

    /// A quantum strategy violates one of its invariants (projector, completeness, norm).
    #[error("invalid strategy: {0}")]
    Strategy(String),

    /// A computed quantity that should be real or Hermitian carries a residue above tolerance.
    #[error("numerical integrity: {0}")]
    Numerical(String),

    /// Exhaustive enumeration refused because the search space exceeds the configured cap.
    #[error("enumeration of {count} deterministic strategies exceeds the cap for d = {d} (max d = {cap})")]
    EnumerationCap { d: usize, cap: usize, count: u128 },

    /// Block-weight extraction requires zero cross mass.
    #[error("cross mass {measured:e} exceeds tolerance {tol:e}")]
    CrossMass { measured: f64, tol: f64 },

    /// A block with (numerically) zero weight has no normalized correlation.
    #[error("block {block} has weight {weight:e}; its correlation is undefined")]
    EmptyBlock { block: usize, weight: f64 },

    #[error("json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

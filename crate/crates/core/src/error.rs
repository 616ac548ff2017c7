use thiserror::Error;

/// Errors raised by the transfer-operator machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("invalid Pauli letter {0} (expected 0..=3)")]
    InvalidLetter(u8),

    #[error("Bloch vector norm {0} exceeds 1")]
    NormExceeded(f64),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid cell graph: {0}")]
    InvalidCell(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("edge cap exceeded: augmented cell has {edges} edges, cap is {cap}")]
    CapExceeded { edges: usize, cap: usize },

    #[error("contraction budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("boundary operator is not positive semidefinite (min eigenvalue {0})")]
    NotPsd(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by invalid input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numerical(_) | Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

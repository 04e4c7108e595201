use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("numerical error: {message} (residual {residual:.3e})")]
    Numerical { message: String, residual: f64 },

    #[error("{lambda} is not an eigenvalue (nearest at distance {distance:.3e})")]
    NotAnEigenvalue { lambda: String, distance: f64 },

    #[error("defective eigenvalue cluster at {lambda}: algebraic multiplicity {algebraic}, geometric {geometric}")]
    Defective { lambda: String, algebraic: usize, geometric: usize },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("not a *-algebra: {0}")]
    NotAnAlgebra(String),

    #[error("decomposition error: {0}")]
    Decomposition(String),

    #[error("permutation extraction failed: {0}")]
    PermutationExtraction(String),

    #[error("faithfulness violation: {0}")]
    Faithfulness(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("derivation violated: {0}")]
    DerivationViolation(String),

    #[error("internal consistency error: {0}")]
    InternalConsistency(String),

    #[error("synthesis check failed: {0}")]
    Synthesis(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by malformed or invalid input, as opposed to a failed structural invariant.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Json(_) | Error::Validation(_) | Error::Dimension(_))
    }
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("arity mismatch: expected {expected} bodies, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("empty input: {0}")]
    Empty(String),
    #[error("singular linear map")]
    Singular,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("not representable in exact arithmetic: {0}")]
    NotRepresentable(String),
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Io(_) => 2,
            Error::NoConvergence(_) => 4,
            Error::Hypothesis(_) => 5,
            _ => 3,
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

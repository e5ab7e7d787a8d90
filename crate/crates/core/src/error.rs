use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// A characteristic foot left the upwind cell; the time step was too large.
    #[error("CFL violation on axis {axis}: |beta| = {beta} at face {face}")]
    CflViolation { axis: usize, face: usize, beta: f64 },

    #[error("singular factorization at pivot {0}")]
    SingularFactorization(usize),

    #[error("singular quasi-neutrality mode (m = {m}, n = {n})")]
    SingularMode { m: i64, n: i64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("step {step}: {source}")]
    AtStep { step: usize, source: Box<Error> },
}

impl Error {
    /// The innermost error, with step context removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            e => e,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

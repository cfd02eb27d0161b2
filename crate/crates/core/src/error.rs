use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of a function (e.g. `y < 0`).
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set or configuration violated one of its invariants.
    #[error("invalid parameters: {0}")]
    Invalid(String),

    /// Adaptive quadrature stopped refining above tolerance.
    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    /// The explicit master-equation stepper precondition was violated.
    #[error("stepper unstable: dt*(k+ + k-) = {0:e} exceeds 0.1")]
    Stability(f64),

    /// Config text could not be parsed.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("degenerate bound: {0}")]
    DegenerateBound(String),
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("no connected graph found after {attempts} attempts")]
    ConnectivityUnreachable { attempts: u32 },
    #[error("graph is disconnected")]
    GraphDisconnected,
    #[error("negative edge weight {weight} on edge ({u}, {v})")]
    NegativeWeight { u: usize, v: usize, weight: f64 },
    #[error("instance too large for exhaustive search: {0}")]
    InstanceTooLarge(String),
    #[error("denominator {mean} is within 5 standard errors ({std_error}) of zero")]
    DenominatorNearZero { mean: f64, std_error: f64 },
    #[error("empty input")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

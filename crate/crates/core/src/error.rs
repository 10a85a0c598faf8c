use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("infeasible solution: {0}")]
    Infeasible(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node budget of {budget} exhausted before the search finished")]
    BudgetExhausted { budget: u64 },

    #[error("brute force needs {required} assignments, above the bound of {bound}")]
    BruteForceBound { required: f64, bound: u64 },

    #[error("sequence of length {0} is too short (need at least 2)")]
    SequenceTooShort(usize),

    #[error("zero standard deviation for {0}")]
    ZeroVariance(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("likelihood unbounded (separation) along {direction}")]
    Separation { direction: String },

    #[error("objective is not finite at the starting point")]
    NonFiniteStart,

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("stratum starvation: {0}")]
    Starvation(String),

    #[error("malformed record: {0}")]
    Malformed(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable class used by the command line front end.
    pub fn class(&self) -> &'static str {
        match self {
            Error::BudgetExhausted { .. } | Error::BruteForceBound { .. } => "budget",
            Error::Calibration(_) | Error::NonFiniteStart | Error::Separation { .. } => {
                "calibration"
            }
            Error::Io(_) => "io",
            _ => "validation",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Malformed(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Malformed(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

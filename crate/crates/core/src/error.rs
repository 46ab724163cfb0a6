use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// A CSV row that could not be interpreted. `line` is 1-based and counts the header.
    #[error("CSV line {line}: {message}")]
    CsvRow { line: u64, message: String },

    #[error("CSV: {0}")]
    Csv(String),

    #[error("XES at byte {position}: {message}")]
    Xes { position: u64, message: String },

    #[error("invalid event log: {0}")]
    InvalidLog(String),

    #[error("event log is empty")]
    EmptyLog,

    #[error("resource `{0}` does not occur in the log")]
    UnknownResource(String),

    #[error("individual `{0}` has no process model on one side of the comparison")]
    MissingIndividual(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),

    #[error("uniformisation of group {group} did not terminate after {iterations} iterations")]
    NonTermination { group: usize, iterations: usize },

    #[error("pseudonym collision between `{0}` and `{1}`")]
    PseudonymCollision(String, String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

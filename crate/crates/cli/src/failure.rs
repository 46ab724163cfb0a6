use std::fmt;

use privmine_core::Error;

/// Process exit codes.
pub const EXIT_IO: i32 = 1;
pub const EXIT_PARAMETER: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn io(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_IO,
            message: message.into(),
        }
    }

    pub fn parameter(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_PARAMETER,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_)
            | Error::CsvRow { .. }
            | Error::Csv(_)
            | Error::Xes { .. }
            | Error::InvalidLog(_)
            | Error::EmptyLog
            | Error::MissingIndividual(_) => EXIT_IO,
            Error::InvalidParameter(_) | Error::UnknownResource(_) => EXIT_PARAMETER,
            Error::InvalidMatrix(_)
            | Error::NonTermination { .. }
            | Error::PseudonymCollision(_, _)
            | Error::Internal(_) => EXIT_INTERNAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, Failure>;

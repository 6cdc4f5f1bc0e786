use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied inconsistent or out-of-range arguments.
    #[error("usage error: {0}")]
    Usage(String),
    /// A model or kernel produced NaN.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A density was zero (or a kernel invalid) where support is required.
    #[error("domain error: {0}")]
    Domain(String),
    /// Every index path through the embedded HMM has zero weight at time `t`.
    #[error("impossible update: no index with positive weight at time {t}")]
    ImpossibleUpdate { t: usize },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    /// An input file parsed as CSV but its contents are malformed.
    #[error("malformed input: {0}")]
    Format(String),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Numeric(_) | Error::Domain(_) | Error::ImpossibleUpdate { .. } => 2,
            Error::Io(_) | Error::Csv(_) | Error::Format(_) => 3,
        }
    }
}

macro_rules! usage {
    ($($arg:tt)*) => { $crate::error::Error::Usage(format!($($arg)*)) };
}
macro_rules! numeric {
    ($($arg:tt)*) => { $crate::error::Error::Numeric(format!($($arg)*)) };
}
macro_rules! domain {
    ($($arg:tt)*) => { $crate::error::Error::Domain(format!($($arg)*)) };
}
macro_rules! format_err {
    ($($arg:tt)*) => { $crate::error::Error::Format(format!($($arg)*)) };
}
pub(crate) use {domain, format_err, numeric, usage};

//! Error taxonomy shared by every module.
//!
//! The variants map onto the process exit codes used by the CLI: bad inputs
//! (validation, config, io) exit 1; numerical failures and internal
//! inconsistencies exit 2.

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Physically or structurally invalid input (negative capacitance,
    /// truncation below the minimum, out-of-range argument, ...).
    #[error("validation: {0}")]
    Validation(String),

    /// Malformed or inconsistent run configuration (unknown key, missing
    /// field, unparsable file).
    #[error("config: {0}")]
    Config(String),

    /// Filesystem failure while reading inputs or writing artifacts.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Numerical failure: singular matrix, diverging integrator step,
    /// non-converged eigensolve.
    #[error("numeric: {0}")]
    Numeric(String),

    /// A broken internal invariant; always a bug, never a user error.
    #[error("internal: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Config(_) | Error::Io(_) => 1,
            Error::Numeric(_) | Error::Internal(_) => 2,
        }
    }

    /// Stable machine-parsable kind tag, used in the one-line stderr report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Numeric(_) => "numeric",
            Error::Internal(_) => "internal",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_partition() {
        assert_eq!(Error::Validation("x".into()).exit_code(), 1);
        assert_eq!(Error::Config("x".into()).exit_code(), 1);
        assert_eq!(Error::Numeric("x".into()).exit_code(), 2);
        assert_eq!(Error::Internal("x".into()).exit_code(), 2);
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("certificate hash mismatch: file has {stored}, rebuilt operators give {rebuilt}")]
    HashMismatch { stored: String, rebuilt: String },
    #[error("no certificate for {0}; run the `asymptotic` subcommand first")]
    MissingCertificate(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("I/O failure: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } | Self::Invariant(_) | Self::HashMismatch { .. } | Self::MissingCertificate(_) => 1,
            Self::Solver(_) => 2,
            Self::Io(_) => 3,
        }
    }

    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Config { key: key.into(), reason: reason.into() }
    }

    pub fn io(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        Self::Io(format!("{context}: {err}"))
    }
}

impl From<cvqkd_core::Error> for CliError {
    fn from(e: cvqkd_core::Error) -> Self {
        use cvqkd_core::Error as E;
        match e {
            E::InvalidParameter { name, reason } => Self::config(name, reason),
            E::Infeasible(_) | E::NotConverged { .. } | E::Numerical(_) | E::SingularInput(_) | E::DegenerateSupport => {
                Self::Solver(e.to_string())
            }
            other => Self::Invariant(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

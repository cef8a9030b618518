use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at '{path}': {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Core(#[from] conley_core::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config { path: path.into(), message: message.into() }
    }

    /// Validation failures and violated hypotheses exit with 2, everything
    /// else with 1.
    pub fn exit_code(&self) -> i32 {
        use conley_core::Error as E;
        match self {
            Self::Config { .. } => 2,
            Self::Core(e) => match e {
                E::NoIsolationMargin(_)
                | E::NotIsolating { .. }
                | E::IsolationLost { .. }
                | E::Precondition(_)
                | E::LyapunovViolation { .. }
                | E::RBelowThreshold { .. }
                | E::DegenerateCriticalPoint { .. }
                | E::ResolutionInsufficient { .. }
                | E::UnsupportedShooting(_)
                | E::NoAdmissibleLevel
                | E::NoPlateau { .. }
                | E::InvalidArgument(_)
                | E::DimensionMismatch { .. } => 2,
                _ => 1,
            },
            Self::Io { .. } | Self::ThreadPool(_) => 1,
        }
    }
}

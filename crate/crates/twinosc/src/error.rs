use thiserror::Error;

/// Failures of the command-line front end, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("slow-envelope regime violated: {0} (pass --force to run anyway)")]
    Regime(String),

    #[error("{0}")]
    FailureBudget(String),

    #[error(transparent)]
    Core(twinosc_core::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Regime(_) => 3,
            CliError::FailureBudget(_) => 4,
            CliError::Core(_) | CliError::Io { .. } | CliError::Csv(_) => 1,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<twinosc_core::Error> for CliError {
    fn from(e: twinosc_core::Error) -> Self {
        match e {
            twinosc_core::Error::FailureBudgetExceeded { .. } => CliError::FailureBudget(e.to_string()),
            twinosc_core::Error::InvalidParameter { .. }
            | twinosc_core::Error::CrossingNotReached { .. }
            | twinosc_core::Error::Unsupported(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Core(other),
        }
    }
}

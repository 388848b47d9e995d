use thiserror::Error;

/// Failure classes; each maps to one process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("solver: {0}")]
    Solver(amopt::Error),
    #[error("threshold: {0}")]
    Threshold(String),
    #[error("exact identity violated: {0}")]
    Identity(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 3,
            CliError::Threshold(_) => 4,
            CliError::Identity(_) => 5,
        }
    }
}

/// Library errors that stem from the configuration rather than the numerics.
pub fn classify(e: amopt::Error) -> CliError {
    use amopt::Error as E;
    match e {
        E::Model(_) | E::Payoff(_) | E::Grid(_) | E::Checkpoint { .. } | E::ProbeSpec(_) | E::Field(_) | E::UnsupportedModel(_) | E::Precondition(_) => {
            CliError::Config(e.to_string())
        }
        other => CliError::Solver(other),
    }
}

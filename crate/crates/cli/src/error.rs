use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config or parameter values.
    #[error("{0}")]
    Usage(String),
    /// The computation itself failed, or output could not be written.
    #[error("{0}")]
    Runtime(String),
    /// Completed, but a requested threshold was not met.
    #[error("{0}")]
    Threshold(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Threshold(_) => 3,
        }
    }
}

impl From<omp_lab::Error> for CliError {
    fn from(e: omp_lab::Error) -> Self {
        use omp_lab::Error as E;
        match e {
            E::DegenerateSelection { .. } | E::TrialFailed { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

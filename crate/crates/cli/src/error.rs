use windspc_core::baseline::BaselineError;
use windspc_core::chart::ChartError;
use windspc_core::ingest::IngestError;
use windspc_core::regress::RegressError;
use windspc_core::simulate::SimulateError;

/// Errors grouped by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("modeling error: {0}")]
    Model(String),
    #[error("config error: {0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Model(_) => 3,
            CliError::Config(_) => 4,
        }
    }

    /// Prefix the message with what was being processed.
    pub fn context(self, what: impl std::fmt::Display) -> Self {
        match self {
            CliError::Input(m) => CliError::Input(format!("{what}: {m}")),
            CliError::Model(m) => CliError::Model(format!("{what}: {m}")),
            CliError::Config(m) => CliError::Config(format!("{what}: {m}")),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::InvalidSchema(_) | IngestError::InvalidInterval { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<RegressError> for CliError {
    fn from(e: RegressError) -> Self {
        match e {
            RegressError::InvalidTerm(_) | RegressError::TooManyCandidates(_) => {
                CliError::Config(e.to_string())
            }
            RegressError::Malformed(_) | RegressError::UnsupportedVersion(_) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Model(e.to_string()),
        }
    }
}

impl From<ChartError> for CliError {
    fn from(e: ChartError) -> Self {
        match e {
            ChartError::InvalidThresholds => CliError::Config(e.to_string()),
            _ => CliError::Model(e.to_string()),
        }
    }
}

impl From<BaselineError> for CliError {
    fn from(e: BaselineError) -> Self {
        match e {
            BaselineError::InvalidMinPoints(_) => CliError::Config(e.to_string()),
            BaselineError::NoValidWindow => CliError::Model(e.to_string()),
        }
    }
}

impl From<SimulateError> for CliError {
    fn from(e: SimulateError) -> Self {
        CliError::Config(e.to_string())
    }
}

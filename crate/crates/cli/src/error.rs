use dropfee::{DynamicsError, OptimumError, TraceError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {key}: {msg}")]
    Config { key: String, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error("degenerate state: {0}")]
    Degenerate(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("trace: {0}")]
    Trace(#[from] TraceError),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn config(key: impl Into<String>, msg: impl ToString) -> Self {
        CliError::Config {
            key: key.into(),
            msg: msg.to_string(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// 0 success, 2 configuration or usage error, 3 degenerate state,
    /// 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 2,
            CliError::Degenerate(_) => 3,
            _ => 1,
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::InvalidConfig { key, msg } => CliError::config(key, msg),
            DynamicsError::Degenerate { .. }
            | DynamicsError::Pricing(_)
            | DynamicsError::Geometry(_) => CliError::Degenerate(e.to_string()),
            DynamicsError::NoCandidate => CliError::Failed(e.to_string()),
        }
    }
}

impl From<OptimumError> for CliError {
    fn from(e: OptimumError) -> Self {
        match e {
            OptimumError::Unknown(_) | OptimumError::NotSummed(_) => CliError::Usage(e.to_string()),
            OptimumError::ZeroBudget => CliError::config("budget", e),
            OptimumError::EmptyFleet => CliError::config("k", e),
        }
    }
}

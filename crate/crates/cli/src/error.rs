use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] shuffle_mix::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
    #[error("invalid metadata: {0}")]
    Meta(#[from] serde_json::Error),
}

impl CliError {
    /// 1 usage or io, 2 bad parameters, 3 horizon, cap or integrity.
    pub fn exit_code(&self) -> i32 {
        use shuffle_mix::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::Parameter(_) | E::Config(_) | E::LengthMismatch { .. } | E::NonIncreasingTimes(_) | E::Domain { .. } => 2,
                E::CapExceeded { .. } | E::TableTooLarge { .. } | E::NumericalIntegrity { .. } | E::Horizon { .. } => 3,
            },
            CliError::Io(_) | CliError::Usage(_) | CliError::Meta(_) => 1,
        }
    }
}

pub fn param(msg: impl Into<String>) -> CliError {
    CliError::Core(shuffle_mix::Error::Parameter(msg.into()))
}

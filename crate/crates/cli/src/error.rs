use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] ddpilot::Error),
    #[error("consistency check failed: {0}")]
    Consistency(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 1 for bad input, 2 for numerical or internal-consistency failures.
    pub fn exit_code(&self) -> i32 {
        use ddpilot::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Core(E::Singular { .. } | E::NotPsd { .. } | E::ZeroNorm) => 2,
            CliError::Core(_) => 1,
            CliError::Consistency(_) | CliError::Csv(_) | CliError::Json(_) => 2,
        }
    }
}

use thiserror::Error;

/// Every failure the front end reports. The exit code groups them:
///
/// | code | meaning                                   |
/// |------|-------------------------------------------|
/// | 0    | success                                   |
/// | 2    | configuration (syntax, unknown/missing)   |
/// | 3    | parameter validation                      |
/// | 4    | numerical failure during the run          |
/// | 5    | I/O                                       |
#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown configuration key: {0}")]
    UnknownKey(String),
    #[error("missing required parameter `{0}`")]
    MissingRequired(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    ValidationFailed(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::UnknownKey(_) | CliError::MissingRequired(_) | CliError::Config(_) => 2,
            CliError::ValidationFailed(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 5,
        }
    }

    pub fn invalid(e: impl std::fmt::Display) -> Self {
        CliError::ValidationFailed(e.to_string())
    }

    pub fn numerical(e: impl std::fmt::Display) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

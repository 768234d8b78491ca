use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    Timeout(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Timeout(_) => 4,
            CliError::Failed(_) => 1,
        }
    }
}

impl From<bewc_core::Error> for CliError {
    fn from(e: bewc_core::Error) -> Self {
        use bewc_core::Error as E;
        let text = e.to_string();
        match e {
            E::Io { .. } => CliError::Io(text),
            E::Timeout { .. } => CliError::Timeout(text),
            E::OutOfRange { .. }
            | E::OutOfRangeReal { .. }
            | E::DimensionMismatch { .. }
            | E::TooLarge { .. }
            | E::ZeroColumn { .. }
            | E::Invalid(_) => CliError::Config(text),
            _ => CliError::Failed(text),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

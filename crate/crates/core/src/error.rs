use thiserror::Error;

/// Errors raised by the library.
///
/// The variants map onto the CLI exit codes: configuration and parse problems
/// are reported before any compute, precondition violations abort a pipeline
/// stage, and everything else is an internal failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("could not parse configuration: {0}")]
    Parse(String),

    #[error("kernel evaluated on the diagonal x = y")]
    Singular,

    #[error("value outside the admissible domain: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("seed list is empty")]
    EmptySeeds,

    #[error("seed rejected: {0}")]
    Seed(String),

    #[error("operation misused: {0}")]
    Misuse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that a config author can fix without touching code.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidDirection(_) | Error::Precondition(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

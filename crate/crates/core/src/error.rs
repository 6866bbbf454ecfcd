use thiserror::Error;

/// Errors raised by the numerical routines and the experiment runner.
///
/// The variants are grouped so that the command line front end can map
/// them onto stable exit codes: configuration problems, precondition
/// violations and exceeded resource caps.
#[derive(Debug, Error)]
pub enum PermlabError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{0}")]
    Precondition(String),

    #[error("{what} needs {requested} states, over the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PermlabError {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        PermlabError::Precondition(msg.into())
    }

    /// Stable machine-readable category name.
    pub fn kind(&self) -> &'static str {
        match self {
            PermlabError::InvalidConfig(_) => "invalid_config",
            PermlabError::Precondition(_) => "precondition",
            PermlabError::CapExceeded { .. } => "cap_exceeded",
            PermlabError::LengthMismatch { .. } => "precondition",
            PermlabError::Parse(_) => "invalid_config",
            PermlabError::Io(_) => "io",
            PermlabError::Json(_) => "invalid_config",
        }
    }

    /// Process exit status used by the `permlab` binary.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "invalid_config" => 2,
            "precondition" => 3,
            "cap_exceeded" => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, PermlabError>;

use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const PROPERTY_FAILURE: i32 = 1;
    pub const INVALID_CONFIG: i32 = 2;
    pub const NUMERICAL_ABORT: i32 = 3;
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("property check failed: {0}")]
    Property(String),

    #[error(transparent)]
    Model(#[from] deffuant_core::Error),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use deffuant_core::Error as E;
        match self {
            HarnessError::Config(_) | HarnessError::Json(_) => exit::INVALID_CONFIG,
            HarnessError::Property(_) => exit::PROPERTY_FAILURE,
            HarnessError::Model(e) => match e {
                E::NonFinite { .. } => exit::NUMERICAL_ABORT,
                e if e.is_property_failure() => exit::PROPERTY_FAILURE,
                _ => exit::INVALID_CONFIG,
            },
            // Unwritable output paths are configuration problems.
            HarnessError::Io { .. } => exit::INVALID_CONFIG,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] tbm_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("invalid experiment config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV output failed: {0}")]
    Csv(#[from] csv::Error),

    #[error("report schema version mismatch: expected {expected}, found {found}")]
    Schema { expected: u32, found: String },

    #[error("worker pool: {0}")]
    Pool(String),

    #[error("{0}")]
    Assertion(String),
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 ok, 2 usage, 3 size limit, 4 resources, 5 schema/IO, 6 assertion.
    pub fn exit_code(&self) -> u8 {
        use tbm_core::Error as E;
        match self {
            LabError::Core(E::InvalidArgument(_)) | LabError::Usage(_) | LabError::Config(_) => 2,
            LabError::Core(E::DegreeLimit { .. } | E::SizeLimit { .. }) => 3,
            LabError::Core(E::MemoryBudget { .. }) | LabError::Pool(_) => 4,
            LabError::Io { .. } | LabError::Json(_) | LabError::Csv(_) | LabError::Schema { .. } => 5,
            LabError::Core(E::Quadrature { .. } | E::NoConvergence { .. }) | LabError::Assertion(_) => 6,
        }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;

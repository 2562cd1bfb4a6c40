use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("schema mismatch: attribute index {attribute} not present (object has {available} attributes)")]
    SchemaMismatch { attribute: usize, available: usize },

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("non-finite value during training: {0}")]
    NonFinite(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

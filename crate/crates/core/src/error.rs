use thiserror::Error;

/// Errors produced by basis construction, field algebra and the SDE driver.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("basis mismatch: field is bound to `{field}` but operation ran against `{basis}`")]
    BasisMismatch { field: String, basis: String },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("basis construction failed: {0}")]
    Construction(String),

    #[error("grid shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("band-limit margin violated: {0}")]
    BandViolation(String),

    #[error("invalid configuration: key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;

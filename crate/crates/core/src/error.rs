use thiserror::Error;

/// Errors raised across the simulator and training stack.
#[derive(Debug, Error)]
pub enum QnnError {
    /// A model, ansatz or run configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    /// A gate or measurement refers to a qubit the register does not have.
    #[error("structural error: {0}")]
    Structure(String),
    /// An input value lies outside the domain of its embedding.
    #[error("domain error: {0}")]
    Domain(String),
    /// The caller passed arguments that cannot be used (empty batch, wrong dimension).
    #[error("usage error: {0}")]
    Usage(String),
    /// Non-finite values appeared during optimization.
    #[error("numerical divergence: {0}")]
    Divergence(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QnnError>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SubspaceError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

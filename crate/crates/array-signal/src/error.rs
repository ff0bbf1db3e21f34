use thiserror::Error;

/// Errors raised while building geometries, scenes, or datasets.
#[derive(Debug, Error)]
pub enum ArraySignalError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid dataset config: {0}")]
    Config(String),
    #[error("dataset io: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("dataset format: {0}")]
    Format(String),
}

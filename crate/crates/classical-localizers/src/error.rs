use thiserror::Error;

#[derive(Debug, Error)]
pub enum LocalizerError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Subspace(#[from] subspace_core::SubspaceError),
    #[error(transparent)]
    ArraySignal(#[from] array_signal::ArraySignalError),
}

//! Synthetic narrowband observations for a uniform linear array whose
//! sources may lie in the radiative near-field.
//!
//! The crate provides the array geometry and its Fresnel region, three
//! steering-vector models (quadratic phase approximation, amplitude-corrected,
//! and exact spherical wavefront), snapshot simulation with controllable
//! source coherence and SNR, sensor-position perturbations for
//! miscalibration studies, and labeled dataset generation with on-disk
//! persistence.

mod dataset;
mod error;
mod geometry;
mod rng;
mod scene;
mod simulate;
mod steering;

pub mod io;

pub use dataset::{generate_dataset, DatasetConfig, DatasetMetadata, LabeledDataset, SourceCount};
pub use error::ArraySignalError;
pub use geometry::{fresnel_region, perturb_geometry, ArrayGeometry, FresnelRegion};
pub use rng::{child_rng, root_rng};
pub use scene::{Coherence, FieldRegime, SourceScene};
pub use simulate::{simulate_snapshots, SnapshotMatrix};
pub use steering::{steering_matrix, steering_vector, SteeringModel};

/// Convenience alias used throughout the workspace.
pub type Result<T> = std::result::Result<T, ArraySignalError>;

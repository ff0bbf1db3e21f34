//! Minimal reverse-mode differentiation engine over real `f64` tensors.
//!
//! Complex quantities ride along as real/imaginary channel pairs ([`CVar`]),
//! which keeps every tape node a plain real tensor while still supporting
//! complex matrix algebra, a differentiable Hermitian eigendecomposition,
//! and the eigenvalues of small rotation operators. Sized for desk-scale
//! array-processing networks: correctness and determinism first, float64
//! throughout.

mod checkpoint;
mod complexops;
mod conv;
mod eig;
mod error;
mod evd;
mod gradcheck;
pub mod ops;
mod optim;
mod tape;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use complexops::{cinv, CVar};
pub use conv::{conv2d, conv2d_transpose};
pub use eig::eig_values_pair;
pub use error::AutodiffError;
pub use evd::hermitian_evd_pair;
pub use gradcheck::{grad_check, grad_check_params};
pub use optim::{GradSet, Optimizer, OptimizerState, ParameterSet, StepOutcome};
pub use tape::{Gradients, Tape, Tensor, Var};

pub type Result<T> = std::result::Result<T, AutodiffError>;

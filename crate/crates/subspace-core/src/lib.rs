//! Second-order statistics, eigen-analysis, and model-order selection shared
//! by every localizer in the workspace.

mod covariance;
mod eigen;
mod error;
mod model_order;
mod small_eig;
mod smoothing;

pub use covariance::{
    autocorrelation_features, empirical_covariance, AutocorrFeatures, CovarianceKind,
    CovarianceLike,
};
pub use eigen::{hermitian_evd, hermitian_evd_matrix, EigenDecomposition};
pub use error::SubspaceError;
pub use model_order::{estimate_num_sources, ic_objective, ModelOrderCriterion, PenaltyRule};
pub use small_eig::{small_eig, SmallEig};
pub use smoothing::spatial_smoothing;

pub type Result<T> = std::result::Result<T, SubspaceError>;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use array_signal::SnapshotMatrix;

use crate::error::SubspaceError;
use crate::Result;

/// Provenance of an `N x N` Hermitian PSD matrix fed to a subspace method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CovarianceKind {
    Empirical,
    Smoothed,
    Surrogate,
}

/// Hermitian positive semi-definite matrix with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceLike {
    matrix: Array2<Complex64>,
    kind: CovarianceKind,
}

impl CovarianceLike {
    /// Wraps a matrix, validating Hermitian symmetry to `1e-10` relative.
    pub fn new(matrix: Array2<Complex64>, kind: CovarianceKind) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(SubspaceError::Dimension(format!(
                "covariance must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(SubspaceError::Numeric("non-finite covariance entry".into()));
        }
        let scale = matrix
            .iter()
            .map(|v| v.norm())
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let mut dev = 0.0f64;
        for i in 0..matrix.nrows() {
            for j in i..matrix.ncols() {
                dev = dev.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if dev > 1e-10 * scale {
            return Err(SubspaceError::Numeric(format!(
                "matrix is not Hermitian: relative deviation {:.3e}",
                dev / scale
            )));
        }
        Ok(Self { matrix, kind })
    }

    /// Internal constructor for matrices Hermitian by construction.
    pub(crate) fn trusted(matrix: Array2<Complex64>, kind: CovarianceKind) -> Self {
        Self { matrix, kind }
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn kind(&self) -> CovarianceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// `(1/T) sum_t x(t) x(t)^H`, Hermitian PSD by construction.
pub fn empirical_covariance(x: &SnapshotMatrix) -> CovarianceLike {
    let data = x.data();
    let t = x.num_snapshots() as f64;
    let xh = data.mapv(|v| v.conj()).reversed_axes();
    let mut r = data.dot(&xh);
    r.mapv_inplace(|v| v / t);
    // enforce exact Hermitian symmetry against rounding
    let n = r.nrows();
    for i in 0..n {
        r[(i, i)] = Complex64::new(r[(i, i)].re, 0.0);
        for j in i + 1..n {
            let avg = 0.5 * (r[(i, j)] + r[(j, i)].conj());
            r[(i, j)] = avg;
            r[(j, i)] = avg.conj();
        }
    }
    CovarianceLike::trusted(r, CovarianceKind::Empirical)
}

/// Lagged autocorrelation feature stack `R_x[0..=tau_max]`.
///
/// `R_x[tau] = (1/(T-tau)) sum_{t=1}^{T-tau} x(t) x(t+tau)^H`, so the zero
/// lag coincides with the empirical covariance.
#[derive(Debug, Clone)]
pub struct AutocorrFeatures {
    lags: Vec<Array2<Complex64>>,
}

impl AutocorrFeatures {
    pub fn tau_max(&self) -> usize {
        self.lags.len() - 1
    }

    pub fn lag(&self, tau: usize) -> &Array2<Complex64> {
        &self.lags[tau]
    }

    pub fn lags(&self) -> &[Array2<Complex64>] {
        &self.lags
    }

    pub fn dim(&self) -> usize {
        self.lags[0].nrows()
    }
}

pub fn autocorrelation_features(x: &SnapshotMatrix, tau_max: usize) -> Result<AutocorrFeatures> {
    let t = x.num_snapshots();
    if tau_max >= t {
        return Err(SubspaceError::Domain(format!(
            "tau_max {tau_max} must be below the snapshot count {t}"
        )));
    }
    let data = x.data();
    let n = x.num_elements();
    let mut lags = Vec::with_capacity(tau_max + 1);
    for tau in 0..=tau_max {
        let mut r = Array2::<Complex64>::zeros((n, n));
        for t0 in 0..t - tau {
            let xt = data.column(t0);
            let xl = data.column(t0 + tau);
            for i in 0..n {
                for j in 0..n {
                    r[(i, j)] += xt[i] * xl[j].conj();
                }
            }
        }
        r.mapv_inplace(|v| v / (t - tau) as f64);
        lags.push(r);
    }
    Ok(AutocorrFeatures { lags })
}

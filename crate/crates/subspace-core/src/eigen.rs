use nalgebra::{Complex, DMatrix};
use ndarray::Array2;
use num_complex::Complex64;

use crate::covariance::CovarianceLike;
use crate::error::SubspaceError;
use crate::Result;

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted
/// descending and eigenvector columns matched to them.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Array2<Complex64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `N x (N - m)` matrix of the least dominant eigenvectors.
    pub fn noise_subspace(&self, num_sources: usize) -> Result<Array2<Complex64>> {
        let n = self.dim();
        if num_sources >= n {
            return Err(SubspaceError::Domain(format!(
                "no noise subspace left for M={num_sources} with N={n}"
            )));
        }
        Ok(self
            .eigenvectors
            .slice(ndarray::s![.., num_sources..])
            .to_owned())
    }

    /// `N x m` matrix of the dominant eigenvectors.
    pub fn signal_subspace(&self, num_sources: usize) -> Result<Array2<Complex64>> {
        let n = self.dim();
        if num_sources == 0 || num_sources > n {
            return Err(SubspaceError::Domain(format!(
                "invalid signal subspace size {num_sources} for N={n}"
            )));
        }
        Ok(self
            .eigenvectors
            .slice(ndarray::s![.., ..num_sources])
            .to_owned())
    }
}

/// Hermitian eigen-decomposition; the input is symmetrized as
/// `(R + R^H)/2` before factoring.
pub fn hermitian_evd(r: &CovarianceLike) -> Result<EigenDecomposition> {
    hermitian_evd_matrix(r.matrix())
}

/// See [`hermitian_evd`]; operates on a bare matrix.
pub fn hermitian_evd_matrix(m: &Array2<Complex64>) -> Result<EigenDecomposition> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(SubspaceError::Dimension(format!(
            "expected square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(SubspaceError::Numeric("non-finite matrix entry".into()));
    }
    let mut h = DMatrix::<Complex<f64>>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let sym = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            h[(i, j)] = Complex::new(sym.re, sym.im);
        }
    }
    let se = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut eigenvectors = Array2::<Complex64>::zeros((n, n));
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            let v = se.eigenvectors[(row, k)];
            eigenvectors[(row, col)] = Complex64::new(v.re, v.im);
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

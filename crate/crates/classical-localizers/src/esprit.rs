use ndarray::{s, Array2};
use num_complex::Complex64;
use std::f64::consts::PI;

use array_signal::ArrayGeometry;
use subspace_core::{hermitian_evd, small_eig, CovarianceLike};

use crate::error::LocalizerError;
use crate::Result;

/// Least-squares ESPRIT on the two maximally overlapping subarrays.
///
/// Assumes far-field steering; angles come from the eigenvalue phases of the
/// rotation operator via `theta = -asin(phase * lambda / (2 pi d))`, sorted
/// ascending. Returns `(angles, clamped)` where `clamped` reports whether
/// any asin argument had to be clamped into [-1, 1].
pub fn esprit_doa(
    r: &CovarianceLike,
    num_sources: usize,
    geometry: &ArrayGeometry,
) -> Result<(Vec<f64>, bool)> {
    if num_sources == 0 {
        return Ok((Vec::new(), false));
    }
    if num_sources >= r.dim() {
        return Err(LocalizerError::Domain(format!(
            "ESPRIT needs M < N, got M={num_sources}, N={}",
            r.dim()
        )));
    }
    let evd = hermitian_evd(r)?;
    let signal = evd.signal_subspace(num_sources)?;
    esprit_doa_from_signal_subspace(&signal, geometry)
}

/// ESPRIT angles from an explicit `N x M` signal subspace.
pub fn esprit_doa_from_signal_subspace(
    signal_subspace: &Array2<Complex64>,
    geometry: &ArrayGeometry,
) -> Result<(Vec<f64>, bool)> {
    let phi = rotation_operator(signal_subspace)?;
    let eig = small_eig(&phi)?;
    let scale = geometry.wavelength() / (2.0 * PI * geometry.spacing());
    let mut clamped = false;
    let mut angles: Vec<f64> = eig
        .values
        .iter()
        .map(|mu| {
            let mut arg = mu.arg() * scale;
            if arg.abs() > 1.0 {
                clamped = true;
                arg = arg.clamp(-1.0, 1.0);
            }
            -arg.asin()
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    Ok((angles, clamped))
}

/// Least-squares rotation operator `(U1^H U1)^{-1} U1^H U2` of the two
/// shifted `(N-1)`-row subarrays of the signal subspace.
pub fn rotation_operator(signal_subspace: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let n = signal_subspace.nrows();
    let m = signal_subspace.ncols();
    if n < 2 || m == 0 || m > n - 1 {
        return Err(LocalizerError::Domain(format!(
            "invalid signal subspace {n}x{m} for the shifted-subarray split"
        )));
    }
    let u1 = signal_subspace.slice(s![..n - 1, ..]);
    let u2 = signal_subspace.slice(s![1.., ..]);
    let u1h = u1.mapv(|v| v.conj()).reversed_axes();
    let gram = u1h.dot(&u1);
    let rhs = u1h.dot(&u2);
    let gram_inv = subspace_core_invert(&gram)?;
    Ok(gram_inv.dot(&rhs))
}

fn subspace_core_invert(a: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    // Gauss-Jordan with partial pivoting; M <= 8 in practice.
    let n = a.nrows();
    let mut aug = Array2::<Complex64>::zeros((n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = a[(i, j)];
        }
        aug[(i, n + i)] = Complex64::new(1.0, 0.0);
    }
    for col in 0..n {
        let mut best = col;
        for row in col + 1..n {
            if aug[(row, col)].norm() > aug[(best, col)].norm() {
                best = row;
            }
        }
        if aug[(best, col)].norm() < 1e-280 {
            return Err(LocalizerError::Domain(
                "singular subarray Gram matrix".into(),
            ));
        }
        if best != col {
            for j in 0..2 * n {
                let tmp = aug[(col, j)];
                aug[(col, j)] = aug[(best, j)];
                aug[(best, j)] = tmp;
            }
        }
        let pivot = aug[(col, col)];
        for j in 0..2 * n {
            aug[(col, j)] /= pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = aug[(row, col)];
            if factor.norm() == 0.0 {
                continue;
            }
            for j in 0..2 * n {
                let sub = factor * aug[(col, j)];
                aug[(row, j)] -= sub;
            }
        }
    }
    let mut inv = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            inv[(i, j)] = aug[(i, n + j)];
        }
    }
    Ok(inv)
}

use ndarray::{s, Array2};
use num_complex::Complex64;

use array_signal::SnapshotMatrix;

use crate::covariance::{CovarianceKind, CovarianceLike};
use crate::error::SubspaceError;
use crate::Result;

/// Forward spatial smoothing: averages the empirical covariances of all
/// `N - L + 1` contiguous length-`L` subarrays, restoring rank for coherent
/// sources at the cost of aperture. Output is `L x L` with kind `Smoothed`.
pub fn spatial_smoothing(x: &SnapshotMatrix, subarray_len: usize) -> Result<CovarianceLike> {
    let n = x.num_elements();
    if subarray_len < 2 {
        return Err(SubspaceError::Domain(format!(
            "subarray length must be at least 2, got {subarray_len}"
        )));
    }
    if subarray_len > n {
        return Err(SubspaceError::Domain(format!(
            "subarray length {subarray_len} exceeds the array size {n}"
        )));
    }
    let t = x.num_snapshots() as f64;
    let num_subarrays = n - subarray_len + 1;
    let mut acc = Array2::<Complex64>::zeros((subarray_len, subarray_len));
    for start in 0..num_subarrays {
        let sub = x.data().slice(s![start..start + subarray_len, ..]);
        let sub_h = sub.mapv(|v| v.conj()).reversed_axes();
        acc = acc + sub.dot(&sub_h);
    }
    acc.mapv_inplace(|v| v / (t * num_subarrays as f64));
    // exact Hermitian symmetry against rounding
    for i in 0..subarray_len {
        acc[(i, i)] = Complex64::new(acc[(i, i)].re, 0.0);
        for j in i + 1..subarray_len {
            let avg = 0.5 * (acc[(i, j)] + acc[(j, i)].conj());
            acc[(i, j)] = avg;
            acc[(j, i)] = avg.conj();
        }
    }
    Ok(CovarianceLike::trusted(acc, CovarianceKind::Smoothed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::empirical_covariance;
    use crate::eigen::hermitian_evd;
    use ndarray::Array2;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn far_field_vector(n: usize, theta: f64) -> Vec<Complex64> {
        (1..=n)
            .map(|k| Complex64::from_polar(1.0, -(k as f64) * PI * theta.sin()))
            .collect()
    }

    #[test]
    fn full_length_subarray_matches_empirical() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x = SnapshotMatrix::new(Array2::from_shape_fn((6, 12), |_| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        }));
        let smoothed = spatial_smoothing(&x, 6).unwrap();
        let empirical = empirical_covariance(&x);
        for (a, b) in smoothed.matrix().iter().zip(empirical.matrix().iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_eq!(smoothed.kind(), CovarianceKind::Smoothed);
    }

    #[test]
    fn coherent_pair_rank_restored() {
        // Two coherent far-field noiseless sources: the plain covariance has
        // rank 1; smoothing over three subarrays restores rank 2.
        let n = 10;
        let t = 32;
        let a1 = far_field_vector(n, 0.4);
        let a2 = far_field_vector(n, -0.25);
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut data = Array2::<Complex64>::zeros((n, t));
        for tt in 0..t {
            let s = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            for i in 0..n {
                data[(i, tt)] = (a1[i] + a2[i]) * s;
            }
        }
        let x = SnapshotMatrix::new(data);
        let smoothed = spatial_smoothing(&x, n - 2).unwrap();
        let evd = hermitian_evd(&smoothed).unwrap();
        assert!(evd.eigenvalues[1] > 1e-3 * evd.eigenvalues[0]);
        assert!(evd.eigenvalues[2] < 1e-6 * evd.eigenvalues[0]);
        // without smoothing the second eigenvalue vanishes
        let plain = hermitian_evd(&empirical_covariance(&x)).unwrap();
        assert!(plain.eigenvalues[1] < 1e-10 * plain.eigenvalues[0]);
    }

    #[test]
    fn single_source_stays_rank_one() {
        let n = 8;
        let a = far_field_vector(n, 0.2);
        let mut data = Array2::<Complex64>::zeros((n, 5));
        for tt in 0..5 {
            let s = Complex64::from_polar(1.0, tt as f64);
            for i in 0..n {
                data[(i, tt)] = a[i] * s;
            }
        }
        let smoothed = spatial_smoothing(&SnapshotMatrix::new(data), 5).unwrap();
        let evd = hermitian_evd(&smoothed).unwrap();
        assert!(evd.eigenvalues[1] < 1e-10 * evd.eigenvalues[0]);
    }

    #[test]
    fn short_subarray_rejected() {
        let x = SnapshotMatrix::new(Array2::<Complex64>::zeros((4, 3)));
        assert!(spatial_smoothing(&x, 1).is_err());
        assert!(spatial_smoothing(&x, 5).is_err());
    }
}

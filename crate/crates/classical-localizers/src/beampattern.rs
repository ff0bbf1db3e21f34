use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use array_signal::{steering_vector, ArrayGeometry, SteeringModel};
use subspace_core::{hermitian_evd_matrix, CovarianceLike};

use crate::grid::SearchGrid;
use crate::music::Spectrum2D;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BeampatternKind {
    /// `a^H R a / ||a||^2`
    Bartlett,
    /// `1 / (a^H R^{-1} a)`, diagonally loaded when near-singular.
    Mvdr,
}

/// Power map of a beamformer steered across the grid.
pub fn beampattern(
    r: &CovarianceLike,
    grid: &SearchGrid,
    geometry: &ArrayGeometry,
    model: SteeringModel,
    kind: BeampatternKind,
) -> Result<Spectrum2D> {
    let quad_matrix = match kind {
        BeampatternKind::Bartlett => r.matrix().clone(),
        BeampatternKind::Mvdr => loaded_inverse(r)?,
    };
    let mut values = Array2::zeros((grid.angles().len(), grid.ranges().len()));
    for (ai, &theta) in grid.angles().iter().enumerate() {
        for (ri, &rho) in grid.ranges().iter().enumerate() {
            let a = steering_vector(theta, rho, geometry, model)?;
            let q = quadratic_form(&quad_matrix, &a);
            values[(ai, ri)] = match kind {
                BeampatternKind::Bartlett => {
                    let norm: f64 = a.iter().map(|v| v.norm_sqr()).sum();
                    q / norm
                }
                BeampatternKind::Mvdr => 1.0 / q.max(1e-300),
            };
        }
    }
    Ok(Spectrum2D {
        values,
        grid: grid.clone(),
    })
}

/// `a^H M a` for Hermitian `M` (real by symmetry).
fn quadratic_form(m: &Array2<Complex64>, a: &ndarray::Array1<Complex64>) -> f64 {
    let n = a.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[i].conj() * m[(i, j)] * a[j];
        }
    }
    acc.re
}

/// Inverse through the eigen-decomposition, diagonally loading with
/// `1e-6 * trace(R) / N` when the spectrum is numerically rank-deficient.
fn loaded_inverse(r: &CovarianceLike) -> Result<Array2<Complex64>> {
    let n = r.dim();
    let mut evd = hermitian_evd_matrix(r.matrix())?;
    let lead = evd.eigenvalues[0].max(0.0);
    if evd.eigenvalues.iter().any(|&l| l <= 1e-12 * lead) {
        let trace: f64 = r.matrix().diag().iter().map(|v| v.re).sum();
        let load = 1e-6 * trace / n as f64;
        let mut loaded = r.matrix().clone();
        for i in 0..n {
            loaded[(i, i)] += load;
        }
        evd = hermitian_evd_matrix(&loaded)?;
    }
    let mut inv = Array2::<Complex64>::zeros((n, n));
    for k in 0..n {
        let lam = evd.eigenvalues[k];
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] +=
                    evd.eigenvectors[(i, k)] * evd.eigenvectors[(j, k)].conj() / lam;
            }
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use array_signal::fresnel_region;
    use subspace_core::CovarianceKind;

    fn setup() -> (ArrayGeometry, SearchGrid) {
        let geometry = ArrayGeometry::new(15, 0.5, 1.0).unwrap();
        let grid =
            SearchGrid::with_steps(&fresnel_region(&geometry), 2f64.to_radians(), 2.0).unwrap();
        (geometry, grid)
    }

    #[test]
    fn identity_covariance_is_flat() {
        let (geometry, grid) = setup();
        let eye = Array2::from_shape_fn((15, 15), |(i, j)| {
            Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
        });
        let r = CovarianceLike::new(eye, CovarianceKind::Surrogate).unwrap();
        let bp = beampattern(
            &r,
            &grid,
            &geometry,
            SteeringModel::FresnelQuadratic,
            BeampatternKind::Bartlett,
        )
        .unwrap();
        let first = bp.values[(0, 0)];
        for v in bp.values.iter() {
            assert!((v - first).abs() < 1e-12);
        }
    }

    #[test]
    fn bartlett_peaks_at_rank_one_source() {
        let (geometry, grid) = setup();
        let (ai, ri) = (20usize, 7usize);
        let a = steering_vector(
            grid.angles()[ai],
            grid.ranges()[ri],
            &geometry,
            SteeringModel::FresnelQuadratic,
        )
        .unwrap();
        let mut m = Array2::from_shape_fn((15, 15), |(i, j)| a[i] * a[j].conj());
        for i in 0..15 {
            m[(i, i)] += 1e-3;
        }
        let r = CovarianceLike::new(m, CovarianceKind::Surrogate).unwrap();
        let bp = beampattern(
            &r,
            &grid,
            &geometry,
            SteeringModel::FresnelQuadratic,
            BeampatternKind::Bartlett,
        )
        .unwrap();
        let mut best = (0usize, 0usize);
        let mut best_v = f64::MIN;
        for i in 0..grid.angles().len() {
            for j in 0..grid.ranges().len() {
                if bp.values[(i, j)] > best_v {
                    best_v = bp.values[(i, j)];
                    best = (i, j);
                }
            }
        }
        assert_eq!(best, (ai, ri));
    }

    #[test]
    fn mvdr_resolves_two_sources() {
        let (geometry, grid) = setup();
        let cells = [(15usize, 5usize), (40usize, 15usize)];
        let mut m = Array2::<Complex64>::zeros((15, 15));
        for &(ai, ri) in &cells {
            let a = steering_vector(
                grid.angles()[ai],
                grid.ranges()[ri],
                &geometry,
                SteeringModel::FresnelQuadratic,
            )
            .unwrap();
            for i in 0..15 {
                for j in 0..15 {
                    m[(i, j)] += a[i] * a[j].conj();
                }
            }
        }
        for i in 0..15 {
            m[(i, i)] += 1e-4;
        }
        let r = CovarianceLike::new(m, CovarianceKind::Surrogate).unwrap();
        let bp = beampattern(
            &r,
            &grid,
            &geometry,
            SteeringModel::FresnelQuadratic,
            BeampatternKind::Mvdr,
        )
        .unwrap();
        // both source cells must be strict local maxima of the MVDR map
        for &(ai, ri) in &cells {
            let v = bp.values[(ai, ri)];
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ni, nj) = ((ai as i64 + di) as usize, (ri as i64 + dj) as usize);
                    assert!(bp.values[(ni, nj)] < v);
                }
            }
        }
    }

    #[test]
    fn mvdr_survives_singular_covariance() {
        let (geometry, grid) = setup();
        let a = steering_vector(0.1, 20.0, &geometry, SteeringModel::FresnelQuadratic).unwrap();
        let m = Array2::from_shape_fn((15, 15), |(i, j)| a[i] * a[j].conj());
        let r = CovarianceLike::new(m, CovarianceKind::Surrogate).unwrap();
        let bp = beampattern(
            &r,
            &grid,
            &geometry,
            SteeringModel::FresnelQuadratic,
            BeampatternKind::Mvdr,
        )
        .unwrap();
        assert!(bp.values.iter().all(|v| v.is_finite() && *v > 0.0));
    }
}

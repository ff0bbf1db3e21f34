use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::ArraySignalError;
use crate::geometry::ArrayGeometry;
use crate::Result;

/// Near-field steering-vector model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SteeringModel {
    /// Unit-modulus entries with quadratic phase in the element index:
    /// `exp(j n w(theta) + j n^2 psi(theta, rho))` where
    /// `w = -(2 pi / lambda) d sin(theta)` and
    /// `psi = (pi / lambda) d^2 cos^2(theta) / rho`.
    FresnelQuadratic,
    /// Same phase scaled per element by `rho / rho_n`, with `rho_n` the exact
    /// element-to-source distance.
    AmplitudeCorrected,
    /// Exact spherical wavefront: `exp(j (2 pi / lambda) (rho_n - rho))`,
    /// without any series approximation.
    ExactSpherical,
}

/// Steering vector towards `(theta, rho)` for the given geometry and model.
///
/// All variants evaluate at the true (possibly perturbed) element positions
/// `x_n = n d + offset_n`; with zero offsets the phases match the indexed
/// closed forms exactly.
pub fn steering_vector(
    theta_rad: f64,
    rho_m: f64,
    geometry: &ArrayGeometry,
    model: SteeringModel,
) -> Result<Array1<Complex64>> {
    if rho_m <= 0.0 || !rho_m.is_finite() {
        return Err(ArraySignalError::Domain(format!(
            "range must be positive, got {rho_m}"
        )));
    }
    debug_assert!(theta_rad.abs() <= PI / 2.0 + 1e-12);
    let lambda = geometry.wavelength();
    let sin_t = theta_rad.sin();
    let cos2_t = theta_rad.cos().powi(2);
    let positions = geometry.element_positions();
    let mut out = Array1::zeros(geometry.num_elements());
    for (entry, &x) in out.iter_mut().zip(&positions) {
        *entry = match model {
            SteeringModel::FresnelQuadratic => {
                let phase = -2.0 * PI / lambda * x * sin_t + PI / lambda * x * x * cos2_t / rho_m;
                Complex64::from_polar(1.0, phase)
            }
            SteeringModel::AmplitudeCorrected => {
                let phase = -2.0 * PI / lambda * x * sin_t + PI / lambda * x * x * cos2_t / rho_m;
                let dist = element_distance(rho_m, sin_t, x);
                Complex64::from_polar(rho_m / dist, phase)
            }
            SteeringModel::ExactSpherical => {
                let dist = element_distance(rho_m, sin_t, x);
                Complex64::from_polar(1.0, 2.0 * PI / lambda * (dist - rho_m))
            }
        };
    }
    Ok(out)
}

/// Steering matrix whose `m`th column is the steering vector of source `m`.
pub fn steering_matrix(
    angles_rad: &[f64],
    ranges_m: &[f64],
    geometry: &ArrayGeometry,
    model: SteeringModel,
) -> Result<Array2<Complex64>> {
    assert_eq!(angles_rad.len(), ranges_m.len());
    let n = geometry.num_elements();
    let mut a = Array2::zeros((n, angles_rad.len()));
    for (m, (&theta, &rho)) in angles_rad.iter().zip(ranges_m).enumerate() {
        let col = steering_vector(theta, rho, geometry, model)?;
        a.column_mut(m).assign(&col);
    }
    Ok(a)
}

/// Exact distance from a source at `(theta, rho)` to the element at axis
/// position `x`: `sqrt(rho^2 - 2 rho x sin(theta) + x^2)`.
fn element_distance(rho: f64, sin_theta: f64, x: f64) -> f64 {
    (rho * rho - 2.0 * rho * x * sin_theta + x * x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geom15() -> ArrayGeometry {
        ArrayGeometry::new(15, 0.5, 1.0).unwrap()
    }

    #[test]
    fn fresnel_entries_have_unit_modulus() {
        let geom = geom15();
        for &theta in &[-1.2, -0.3, 0.0, 0.7, 1.5] {
            for &rho in &[7.0, 20.0, 90.0] {
                let a = steering_vector(theta, rho, &geom, SteeringModel::FresnelQuadratic)
                    .unwrap();
                for v in a.iter() {
                    assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn broadside_reduces_to_pure_quadratic_phase() {
        // sin(0) = 0 kills the linear term.
        let geom = geom15();
        let rho = 12.5;
        let a = steering_vector(0.0, rho, &geom, SteeringModel::FresnelQuadratic).unwrap();
        for (i, v) in a.iter().enumerate() {
            let n = (i + 1) as f64;
            let expected = Complex64::from_polar(1.0, n * n * PI * 0.25 / rho);
            assert_relative_eq!((v - expected).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn quadratic_term_vanishes_deep_in_far_field() {
        let geom = geom15();
        let rho = 1e6 * 98.0;
        let theta = 0.4f64;
        let n = geom.num_elements() as f64;
        let psi = PI / geom.wavelength() * geom.spacing().powi(2) * theta.cos().powi(2) / rho;
        assert!(psi.abs() * n * n < 1e-3);
        let a = steering_vector(theta, rho, &geom, SteeringModel::FresnelQuadratic).unwrap();
        let w = -2.0 * PI / geom.wavelength() * geom.spacing() * theta.sin();
        for (i, v) in a.iter().enumerate() {
            let far = Complex64::from_polar(1.0, (i as f64 + 1.0) * w);
            assert!((v - far).norm() < 1e-3);
        }
    }

    #[test]
    fn matches_independent_term_by_term_evaluation() {
        // Oracle: scalar evaluation of the quadratic-phase model per element,
        // written out independently of the production formula.
        let geom = geom15();
        let theta = 30f64.to_radians();
        let rho = 10.0;
        let a = steering_vector(theta, rho, &geom, SteeringModel::FresnelQuadratic).unwrap();
        let omega = -2.0 * PI / 1.0 * 0.5 * 0.5; // -(2pi/lambda) d sin(30deg)
        let psi = PI / 1.0 * 0.25 * (0.75) / 10.0; // (pi/lambda) d^2 cos^2(30deg) / rho
        for (i, v) in a.iter().enumerate() {
            let n = (i + 1) as f64;
            let expected = Complex64::new(0.0, n * omega + n * n * psi).exp();
            assert_relative_eq!((v - expected).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn all_models_converge_to_far_field_vector() {
        // Entrywise far-field reduction. The quadratic residual scales as
        // pi N^2 / (2000 (N-1)^2) ~ 1.6e-3 at 1e3x the Fraunhofer limit, so
        // the tight 1e-4 check runs at 1e5x.
        let geom = geom15();
        let rho_max = 98.0;
        let theta = -0.5f64;
        let w = -2.0 * PI / geom.wavelength() * geom.spacing() * theta.sin();
        for (factor, tol) in [(1e3, 2e-3), (1e5, 1e-4)] {
            let rho = factor * rho_max;
            for model in [
                SteeringModel::FresnelQuadratic,
                SteeringModel::AmplitudeCorrected,
                SteeringModel::ExactSpherical,
            ] {
                let a = steering_vector(theta, rho, &geom, model).unwrap();
                let dev = a
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v - Complex64::from_polar(1.0, (i as f64 + 1.0) * w)).norm())
                    .fold(0.0f64, f64::max);
                assert!(dev < tol, "model {model:?} factor {factor}: dev {dev}");
            }
        }
    }

    #[test]
    fn perturbed_positions_change_the_vector() {
        let geom = geom15();
        let perturbed = geom.clone().with_offsets(vec![0.05; 15]).unwrap();
        let a = steering_vector(0.3, 10.0, &geom, SteeringModel::FresnelQuadratic).unwrap();
        let b = steering_vector(0.3, 10.0, &perturbed, SteeringModel::FresnelQuadratic).unwrap();
        assert!((&a - &b).iter().map(|v| v.norm()).sum::<f64>() > 1e-3);
    }

    #[test]
    fn nonpositive_range_rejected() {
        let geom = geom15();
        assert!(steering_vector(0.1, 0.0, &geom, SteeringModel::FresnelQuadratic).is_err());
        assert!(steering_vector(0.1, -5.0, &geom, SteeringModel::ExactSpherical).is_err());
    }
}

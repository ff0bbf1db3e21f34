use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ArraySignalError;
use crate::Result;

/// Uniform linear array description.
///
/// Element `n` (1-based, `n = 1..=N`) sits at `n * spacing + offset[n-1]`
/// along the array axis. Offsets are zero for a calibrated array; a
/// perturbed geometry keeps the nominal `spacing` that localizers assume
/// while the signal generator uses the true positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    num_elements: usize,
    spacing_m: f64,
    wavelength_m: f64,
    element_offsets_m: Vec<f64>,
}

impl ArrayGeometry {
    pub fn new(num_elements: usize, spacing_m: f64, wavelength_m: f64) -> Result<Self> {
        if num_elements < 2 {
            return Err(ArraySignalError::InvalidGeometry(format!(
                "need at least 2 elements (zero aperture), got {num_elements}"
            )));
        }
        if spacing_m <= 0.0 || !spacing_m.is_finite() {
            return Err(ArraySignalError::InvalidGeometry(format!(
                "spacing must be positive, got {spacing_m}"
            )));
        }
        if wavelength_m <= 0.0 || !wavelength_m.is_finite() {
            return Err(ArraySignalError::InvalidGeometry(format!(
                "wavelength must be positive, got {wavelength_m}"
            )));
        }
        Ok(Self {
            num_elements,
            spacing_m,
            wavelength_m,
            element_offsets_m: vec![0.0; num_elements],
        })
    }

    /// Half-wavelength spaced array, the configuration used throughout the
    /// experiments.
    pub fn half_wavelength(num_elements: usize, wavelength_m: f64) -> Result<Self> {
        Self::new(num_elements, wavelength_m / 2.0, wavelength_m)
    }

    pub fn with_offsets(mut self, offsets_m: Vec<f64>) -> Result<Self> {
        if offsets_m.len() != self.num_elements {
            return Err(ArraySignalError::InvalidGeometry(format!(
                "expected {} offsets, got {}",
                self.num_elements,
                offsets_m.len()
            )));
        }
        self.element_offsets_m = offsets_m;
        Ok(self)
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn spacing(&self) -> f64 {
        self.spacing_m
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength_m
    }

    /// Aperture `D = (N - 1) * d`.
    pub fn aperture(&self) -> f64 {
        (self.num_elements as f64 - 1.0) * self.spacing_m
    }

    pub fn offsets(&self) -> &[f64] {
        &self.element_offsets_m
    }

    pub fn has_offsets(&self) -> bool {
        self.element_offsets_m.iter().any(|&o| o != 0.0)
    }

    /// True element positions along the array axis, `n*d + offset_n`.
    pub fn element_positions(&self) -> Vec<f64> {
        (1..=self.num_elements)
            .map(|n| n as f64 * self.spacing_m + self.element_offsets_m[n - 1])
            .collect()
    }

    /// The same array restricted to its first `len` elements; used when
    /// localizing from a spatially smoothed covariance.
    pub fn leading_subarray(&self, len: usize) -> Result<Self> {
        if len < 2 || len > self.num_elements {
            return Err(ArraySignalError::InvalidGeometry(format!(
                "subarray length {len} outside [2, {}]",
                self.num_elements
            )));
        }
        Ok(Self {
            num_elements: len,
            spacing_m: self.spacing_m,
            wavelength_m: self.wavelength_m,
            element_offsets_m: self.element_offsets_m[..len].to_vec(),
        })
    }
}

/// Radiative near-field boundaries of an array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FresnelRegion {
    pub rho_min_m: f64,
    pub rho_max_m: f64,
}

/// Fresnel limit `(D^4 / 8 lambda)^(1/3)` and Fraunhofer limit `2 D^2 / lambda`.
pub fn fresnel_region(geometry: &ArrayGeometry) -> FresnelRegion {
    let d = geometry.aperture();
    let lambda = geometry.wavelength();
    FresnelRegion {
        rho_min_m: (d.powi(4) / (8.0 * lambda)).cbrt(),
        rho_max_m: 2.0 * d * d / lambda,
    }
}

/// Draws i.i.d. `Uniform[-eta, eta]` position offsets for every sensor.
///
/// The perturbed positions drive signal generation; localizers keep assuming
/// the nominal spacing.
pub fn perturb_geometry<R: Rng>(
    geometry: &ArrayGeometry,
    eta_m: f64,
    rng: &mut R,
) -> Result<ArrayGeometry> {
    if eta_m < 0.0 || !eta_m.is_finite() {
        return Err(ArraySignalError::Domain(format!(
            "perturbation bound must be nonnegative, got {eta_m}"
        )));
    }
    let offsets = if eta_m == 0.0 {
        vec![0.0; geometry.num_elements()]
    } else {
        (0..geometry.num_elements())
            .map(|_| rng.gen_range(-eta_m..=eta_m))
            .collect()
    };
    geometry.clone().with_offsets(offsets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::root_rng;
    use approx::assert_relative_eq;

    #[test]
    fn fresnel_region_closed_forms() {
        // Oracle: direct evaluation of the two closed forms.
        let geom = ArrayGeometry::new(15, 0.5, 1.0).unwrap();
        let d: f64 = 14.0 * 0.5;
        let oracle_min = (d.powi(4) / 8.0).cbrt();
        let oracle_max = 2.0 * d * d;
        let region = fresnel_region(&geom);
        assert_relative_eq!(region.rho_min_m, oracle_min, epsilon = 1e-12);
        assert_relative_eq!(region.rho_max_m, oracle_max, epsilon = 1e-12);
        // Frozen oracle values.
        assert_relative_eq!(region.rho_min_m, 6.6952591397, epsilon = 1e-8);
        assert_relative_eq!(region.rho_max_m, 98.0, epsilon = 1e-12);
    }

    #[test]
    fn fresnel_region_two_elements() {
        let geom = ArrayGeometry::new(2, 0.5, 1.0).unwrap();
        let region = fresnel_region(&geom);
        // D = 0.5: (0.5^4/8)^(1/3) computed directly.
        let oracle_min = (0.5f64.powi(4) / 8.0).cbrt();
        assert_relative_eq!(region.rho_min_m, oracle_min, epsilon = 1e-12);
        assert_relative_eq!(region.rho_min_m, 0.19842513, epsilon = 1e-7);
        assert_relative_eq!(region.rho_max_m, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn single_element_is_invalid() {
        assert!(matches!(
            ArrayGeometry::new(1, 0.5, 1.0),
            Err(ArraySignalError::InvalidGeometry(_))
        ));
    }

    #[test]
    fn aperture_follows_construction() {
        let geom = ArrayGeometry::new(7, 0.25, 1.5).unwrap();
        assert_relative_eq!(geom.aperture(), 6.0 * 0.25);
        let mut rng = root_rng(3);
        let pert = perturb_geometry(&geom, 0.05, &mut rng).unwrap();
        assert_relative_eq!(pert.aperture(), geom.aperture());
    }

    #[test]
    fn perturbation_zero_is_identity() {
        let geom = ArrayGeometry::new(5, 0.5, 1.0).unwrap();
        let mut rng = root_rng(1);
        let pert = perturb_geometry(&geom, 0.0, &mut rng).unwrap();
        assert_eq!(pert, geom);
    }

    #[test]
    fn perturbation_respects_support() {
        let geom = ArrayGeometry::new(8, 0.5, 1.0).unwrap();
        let eta = 0.1;
        let mut rng = root_rng(11);
        for _ in 0..100 {
            let pert = perturb_geometry(&geom, eta, &mut rng).unwrap();
            assert!(pert.offsets().iter().all(|o| o.abs() <= eta));
        }
    }

    #[test]
    fn perturbation_mean_is_centered() {
        // Monte-Carlo oracle: mean of 1e5 Uniform[-eta, eta] draws should sit
        // within 3 standard errors of zero.
        let geom = ArrayGeometry::new(2, 0.5, 1.0).unwrap();
        let eta = 0.1;
        let n = 100_000usize;
        let mut rng = root_rng(17);
        let mut sum = 0.0;
        let mut count = 0usize;
        for _ in 0..n / 2 {
            let pert = perturb_geometry(&geom, eta, &mut rng).unwrap();
            sum += pert.offsets().iter().sum::<f64>();
            count += 2;
        }
        let mean = sum / count as f64;
        let std_err = eta / 3.0f64.sqrt() / (count as f64).sqrt();
        assert!(mean.abs() < 3.0 * std_err, "mean {mean} vs 3se {std_err}");
    }

    #[test]
    fn negative_perturbation_rejected() {
        let geom = ArrayGeometry::new(4, 0.5, 1.0).unwrap();
        let mut rng = root_rng(0);
        assert!(perturb_geometry(&geom, -0.1, &mut rng).is_err());
    }
}

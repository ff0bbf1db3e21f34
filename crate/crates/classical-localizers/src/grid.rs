use serde::{Deserialize, Serialize};

use array_signal::FresnelRegion;

use crate::error::LocalizerError;
use crate::Result;

/// Search grid over angle and range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    angles_rad: Vec<f64>,
    ranges_m: Vec<f64>,
}

impl SearchGrid {
    pub fn new(angles_rad: Vec<f64>, ranges_m: Vec<f64>) -> Result<Self> {
        for (name, axis) in [("angle", &angles_rad), ("range", &ranges_m)] {
            if axis.len() < 2 {
                return Err(LocalizerError::Grid(format!(
                    "{name} axis needs at least 2 points, got {}",
                    axis.len()
                )));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(LocalizerError::Grid(format!(
                    "{name} axis must be strictly increasing"
                )));
            }
        }
        Ok(Self {
            angles_rad,
            ranges_m,
        })
    }

    /// The evaluation default: angles from -60 to 60 degrees in half-degree
    /// steps, ranges from the Fresnel limit to half the Fraunhofer limit in
    /// half-meter steps.
    pub fn default_for(region: &FresnelRegion) -> Result<Self> {
        Self::with_steps(region, 0.5f64.to_radians(), 0.5)
    }

    pub fn with_steps(
        region: &FresnelRegion,
        angle_step_rad: f64,
        range_step_m: f64,
    ) -> Result<Self> {
        let angles = linspace_step(-60f64.to_radians(), 60f64.to_radians(), angle_step_rad);
        let ranges = linspace_step(region.rho_min_m, region.rho_max_m / 2.0, range_step_m);
        Self::new(angles, ranges)
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles_rad
    }

    pub fn ranges(&self) -> &[f64] {
        &self.ranges_m
    }

    pub fn num_cells(&self) -> usize {
        self.angles_rad.len() * self.ranges_m.len()
    }
}

/// `start, start + step, ...` up to and including the last point <= stop
/// (with a half-step tolerance against rounding).
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0);
    let mut axis = Vec::new();
    let mut k = 0usize;
    loop {
        let v = start + k as f64 * step;
        if v > stop + step * 1e-9 {
            break;
        }
        axis.push(v);
        k += 1;
    }
    axis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_matches_protocol() {
        let region = FresnelRegion {
            rho_min_m: 6.695259139703361,
            rho_max_m: 98.0,
        };
        let grid = SearchGrid::default_for(&region).unwrap();
        assert_eq!(grid.angles().len(), 241);
        assert!((grid.angles()[0] + 60f64.to_radians()).abs() < 1e-12);
        assert!((grid.angles()[240] - 60f64.to_radians()).abs() < 1e-9);
        assert!((grid.ranges()[0] - region.rho_min_m).abs() < 1e-12);
        assert!(*grid.ranges().last().unwrap() <= 49.0 + 1e-9);
        assert_eq!(grid.ranges().len(), 85);
    }

    #[test]
    fn rejects_degenerate_axes() {
        assert!(SearchGrid::new(vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(SearchGrid::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(SearchGrid::new(vec![0.0, 0.1], vec![2.0, 1.0]).is_err());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::ArraySignalError;
use crate::geometry::FresnelRegion;
use crate::Result;

/// Source waveform correlation across the scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coherence {
    /// Independent unit-power waveforms.
    NonCoherent,
    /// All sources transmit the same waveform.
    FullyCoherent,
}

/// Whether a source lies inside the Fresnel region or beyond the Fraunhofer
/// limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldRegime {
    NearField,
    FarField,
}

/// Ground truth for one sample: per-source angle, range, regime flag, plus
/// the scene-wide coherence mode.
///
/// Far-field sources carry the Fraunhofer sentinel range (range is
/// unobservable beyond it); the range used to synthesize their wavefront is
/// kept separately by the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceScene {
    angles_rad: Vec<f64>,
    ranges_m: Vec<f64>,
    regimes: Vec<FieldRegime>,
    coherence: Coherence,
}

impl SourceScene {
    /// Scene of near-field sources inside `region`.
    pub fn near_field(
        angles_rad: Vec<f64>,
        ranges_m: Vec<f64>,
        coherence: Coherence,
        region: &FresnelRegion,
    ) -> Result<Self> {
        let regimes = vec![FieldRegime::NearField; angles_rad.len()];
        Self::new(angles_rad, ranges_m, regimes, coherence, region)
    }

    pub fn new(
        angles_rad: Vec<f64>,
        ranges_m: Vec<f64>,
        regimes: Vec<FieldRegime>,
        coherence: Coherence,
        region: &FresnelRegion,
    ) -> Result<Self> {
        if angles_rad.is_empty() {
            return Err(ArraySignalError::InvalidScene(
                "scene needs at least one source".into(),
            ));
        }
        if angles_rad.len() != ranges_m.len() || angles_rad.len() != regimes.len() {
            return Err(ArraySignalError::InvalidScene(format!(
                "angle/range/regime lengths differ: {} vs {} vs {}",
                angles_rad.len(),
                ranges_m.len(),
                regimes.len()
            )));
        }
        if let Some(theta) = angles_rad
            .iter()
            .find(|t| !t.is_finite() || t.abs() > std::f64::consts::FRAC_PI_2)
        {
            return Err(ArraySignalError::InvalidScene(format!(
                "angle {theta} outside [-pi/2, pi/2]"
            )));
        }
        for (rho, regime) in ranges_m.iter().zip(&regimes) {
            match regime {
                FieldRegime::NearField => {
                    if *rho < region.rho_min_m || *rho > region.rho_max_m {
                        return Err(ArraySignalError::InvalidScene(format!(
                            "near-field range {rho} outside [{}, {}]",
                            region.rho_min_m, region.rho_max_m
                        )));
                    }
                }
                FieldRegime::FarField => {
                    if *rho != region.rho_max_m {
                        return Err(ArraySignalError::InvalidScene(format!(
                            "far-field source must carry the sentinel range {}, got {rho}",
                            region.rho_max_m
                        )));
                    }
                }
            }
        }
        Ok(Self {
            angles_rad,
            ranges_m,
            regimes,
            coherence,
        })
    }

    pub fn num_sources(&self) -> usize {
        self.angles_rad.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles_rad
    }

    pub fn ranges(&self) -> &[f64] {
        &self.ranges_m
    }

    pub fn regimes(&self) -> &[FieldRegime] {
        &self.regimes
    }

    pub fn coherence(&self) -> Coherence {
        self.coherence
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region() -> FresnelRegion {
        FresnelRegion {
            rho_min_m: 6.7,
            rho_max_m: 98.0,
        }
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        let r = region();
        assert!(SourceScene::near_field(vec![], vec![], Coherence::NonCoherent, &r).is_err());
        assert!(
            SourceScene::near_field(vec![0.1], vec![10.0, 20.0], Coherence::NonCoherent, &r)
                .is_err()
        );
    }

    #[test]
    fn rejects_out_of_region_near_field() {
        let r = region();
        assert!(SourceScene::near_field(vec![0.0], vec![1.0], Coherence::NonCoherent, &r).is_err());
        assert!(
            SourceScene::near_field(vec![0.0], vec![200.0], Coherence::NonCoherent, &r).is_err()
        );
    }

    #[test]
    fn far_field_carries_sentinel() {
        let r = region();
        let ok = SourceScene::new(
            vec![0.2],
            vec![98.0],
            vec![FieldRegime::FarField],
            Coherence::NonCoherent,
            &r,
        );
        assert!(ok.is_ok());
        let bad = SourceScene::new(
            vec![0.2],
            vec![50.0],
            vec![FieldRegime::FarField],
            Coherence::NonCoherent,
            &r,
        );
        assert!(bad.is_err());
    }
}

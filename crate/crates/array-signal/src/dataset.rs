use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::ArraySignalError;
use crate::geometry::{fresnel_region, ArrayGeometry};
use crate::rng::child_rng;
use crate::scene::{Coherence, FieldRegime, SourceScene};
use crate::simulate::{simulate_snapshots_at, SnapshotMatrix};
use crate::steering::SteeringModel;
use crate::Result;

/// Number of sources per sample: fixed, or drawn uniformly from a range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SourceCount {
    Fixed(usize),
    Range { min: usize, max: usize },
}

impl SourceCount {
    fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        match *self {
            SourceCount::Fixed(m) => m,
            SourceCount::Range { min, max } => rng.gen_range(min..=max),
        }
    }

    pub fn max(&self) -> usize {
        match *self {
            SourceCount::Fixed(m) => m,
            SourceCount::Range { max, .. } => max,
        }
    }

    fn validate(&self, num_elements: usize) -> Result<()> {
        let (lo, hi) = match *self {
            SourceCount::Fixed(m) => (m, m),
            SourceCount::Range { min, max } => (min, max),
        };
        if lo < 1 || hi < lo {
            return Err(ArraySignalError::Config(format!(
                "invalid source count range [{lo}, {hi}]"
            )));
        }
        if hi >= num_elements {
            return Err(ArraySignalError::Config(format!(
                "source count {hi} must stay below the element count {num_elements}"
            )));
        }
        Ok(())
    }
}

/// Generation recipe for a labeled dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub num_samples: usize,
    pub snapshots: usize,
    pub snr_db: f64,
    pub coherence: Coherence,
    pub sources: SourceCount,
    pub steering_model: SteeringModel,
    /// Angle support in radians; defaults to `[-pi/3, pi/3]`.
    #[serde(default)]
    pub angle_support_rad: Option<(f64, f64)>,
    /// Range support in meters; defaults to `[rho_min, rho_max / 2]`.
    /// Extending the upper bound past the Fraunhofer limit yields mixed
    /// scenes whose beyond-limit sources are labeled far-field.
    #[serde(default)]
    pub range_support_m: Option<(f64, f64)>,
}

impl DatasetConfig {
    pub fn angle_support(&self) -> (f64, f64) {
        self.angle_support_rad.unwrap_or((-PI / 3.0, PI / 3.0))
    }

    pub fn range_support(&self, geometry: &ArrayGeometry) -> (f64, f64) {
        self.range_support_m.unwrap_or_else(|| {
            let region = fresnel_region(geometry);
            (region.rho_min_m, region.rho_max_m / 2.0)
        })
    }
}

/// Metadata persisted with every dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub geometry: ArrayGeometry,
    pub config: DatasetConfig,
    pub seed: u64,
}

/// Samples plus the recipe that produced them.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub samples: Vec<(SnapshotMatrix, SourceScene)>,
    pub metadata: DatasetMetadata,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Draws `num_samples` labeled scenes and their observations.
///
/// Angles and in-region ranges are uniform over their supports; each sample
/// owns a child generator derived from `(seed, sample index)`, so generation
/// is deterministic and order-independent. Sources drawn beyond the
/// Fraunhofer limit keep their physical range for wavefront synthesis but
/// are labeled far-field with the sentinel range.
pub fn generate_dataset(
    config: &DatasetConfig,
    geometry: &ArrayGeometry,
    seed: u64,
) -> Result<LabeledDataset> {
    config.sources.validate(geometry.num_elements())?;
    let (theta_lo, theta_hi) = config.angle_support();
    let (rho_lo, rho_hi) = config.range_support(geometry);
    if !(theta_lo < theta_hi) || !(rho_lo < rho_hi) || rho_lo <= 0.0 {
        return Err(ArraySignalError::Config(format!(
            "empty support: angles [{theta_lo}, {theta_hi}], ranges [{rho_lo}, {rho_hi}]"
        )));
    }
    let region = fresnel_region(geometry);
    if rho_lo < region.rho_min_m {
        return Err(ArraySignalError::Config(format!(
            "range support starts below the Fresnel limit {}",
            region.rho_min_m
        )));
    }

    let mut samples = Vec::with_capacity(config.num_samples);
    for j in 0..config.num_samples {
        let mut rng = child_rng(seed, j as u64);
        let m = config.sources.draw(&mut rng);
        let angles: Vec<f64> = (0..m).map(|_| rng.gen_range(theta_lo..=theta_hi)).collect();
        let physical: Vec<f64> = (0..m).map(|_| rng.gen_range(rho_lo..=rho_hi)).collect();
        let mut labeled = Vec::with_capacity(m);
        let mut regimes = Vec::with_capacity(m);
        for &rho in &physical {
            if rho > region.rho_max_m {
                labeled.push(region.rho_max_m);
                regimes.push(FieldRegime::FarField);
            } else {
                labeled.push(rho);
                regimes.push(FieldRegime::NearField);
            }
        }
        let scene = SourceScene::new(angles, labeled, regimes, config.coherence, &region)?;
        let x = simulate_snapshots_at(
            &scene,
            &physical,
            geometry,
            config.steering_model,
            config.snr_db,
            config.snapshots,
            &mut rng,
        )?;
        samples.push((x, scene));
    }
    Ok(LabeledDataset {
        samples,
        metadata: DatasetMetadata {
            geometry: geometry.clone(),
            config: config.clone(),
            seed,
        },
    })
}

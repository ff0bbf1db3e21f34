use serde::{Deserialize, Serialize};

use array_signal::{ArrayGeometry, SnapshotMatrix, SteeringModel};
use subspace_core::{
    empirical_covariance, estimate_num_sources, hermitian_evd, spatial_smoothing,
    ModelOrderCriterion,
};

use crate::error::LocalizerError;
use crate::grid::SearchGrid;
use crate::music::music_spectrum_2d;
use crate::peaks::find_peaks_2d;
use crate::Result;

/// Localization output: estimated source count, angles, ranges, far-field
/// flags, and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub num_sources: usize,
    pub angles_rad: Vec<f64>,
    pub ranges_m: Vec<f64>,
    pub far_field: Vec<bool>,
    /// Which algorithm produced this estimate.
    pub method: String,
    /// Which model-order rule selected the source count, when one ran.
    pub rule: Option<ModelOrderCriterion>,
}

impl Estimate {
    pub fn empty(method: &str, rule: Option<ModelOrderCriterion>) -> Self {
        Self {
            num_sources: 0,
            angles_rad: Vec::new(),
            ranges_m: Vec::new(),
            far_field: Vec::new(),
            method: method.to_string(),
            rule,
        }
    }
}

/// How the pipeline settles the number of sources.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelOrder {
    /// Skip estimation; the count is known.
    Known(usize),
    Rule(ModelOrderCriterion),
}

/// Options for the 2D MUSIC pipeline.
#[derive(Debug, Clone)]
pub struct MusicOptions {
    pub model_order: ModelOrder,
    /// Decorrelate coherent sources with forward spatial smoothing.
    pub coherent: bool,
    /// Subarray length for smoothing; defaults to `N - ceil(M_max / 2)`.
    pub subarray_len: Option<usize>,
    /// Largest source count the smoothing must support (drives the default
    /// subarray length).
    pub max_sources: Option<usize>,
    pub model: SteeringModel,
}

impl MusicOptions {
    pub fn known(m: usize) -> Self {
        Self {
            model_order: ModelOrder::Known(m),
            coherent: false,
            subarray_len: None,
            max_sources: None,
            model: SteeringModel::FresnelQuadratic,
        }
    }

    pub fn with_rule(rule: ModelOrderCriterion) -> Self {
        Self {
            model_order: ModelOrder::Rule(rule),
            coherent: false,
            subarray_len: None,
            max_sources: None,
            model: SteeringModel::FresnelQuadratic,
        }
    }

    pub fn coherent(mut self) -> Self {
        self.coherent = true;
        self
    }

    fn smoothing_len(&self, n: usize) -> usize {
        self.subarray_len.unwrap_or_else(|| {
            let m_max = self.max_sources.unwrap_or(match self.model_order {
                ModelOrder::Known(m) => m,
                ModelOrder::Rule(_) => n / 2,
            });
            n - m_max.div_ceil(2)
        })
    }
}

/// Full 2D near-field MUSIC pipeline: covariance (spatially smoothed when
/// coherent), eigen-decomposition, model-order selection, noise subspace,
/// spectrum, peak picking.
pub fn localize_2d_music(
    x: &SnapshotMatrix,
    geometry: &ArrayGeometry,
    grid: &SearchGrid,
    options: &MusicOptions,
) -> Result<Estimate> {
    let method = if options.coherent { "sps-2d-music" } else { "2d-music" };
    let (covariance, eff_geometry) = if options.coherent {
        let len = options.smoothing_len(geometry.num_elements());
        (
            spatial_smoothing(x, len)?,
            geometry.leading_subarray(len)?,
        )
    } else {
        (empirical_covariance(x), geometry.clone())
    };
    let evd = hermitian_evd(&covariance)?;
    let (m_hat, rule) = match options.model_order {
        ModelOrder::Known(m) => (m, None),
        ModelOrder::Rule(rule) => (
            estimate_num_sources(&evd, x.num_snapshots(), rule),
            Some(rule),
        ),
    };
    if m_hat == 0 {
        return Ok(Estimate::empty(method, rule));
    }
    if m_hat >= eff_geometry.num_elements() {
        return Err(LocalizerError::Domain(format!(
            "estimated {m_hat} sources but the effective array has {} elements",
            eff_geometry.num_elements()
        )));
    }
    let noise = evd.noise_subspace(m_hat)?;
    let spectrum = music_spectrum_2d(&noise, grid, &eff_geometry, options.model)?;
    let mut estimate = find_peaks_2d(&spectrum, m_hat, method)?;
    estimate.rule = rule;
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use array_signal::{
        child_rng, fresnel_region, simulate_snapshots, Coherence, SourceScene,
    };

    fn geometry() -> ArrayGeometry {
        ArrayGeometry::new(15, 0.5, 1.0).unwrap()
    }

    fn coarse_grid(geometry: &ArrayGeometry) -> SearchGrid {
        SearchGrid::with_steps(&fresnel_region(geometry), 1f64.to_radians(), 1.0).unwrap()
    }

    #[test]
    fn known_order_bypasses_estimation() {
        let geom = geometry();
        let region = fresnel_region(&geom);
        let grid = coarse_grid(&geom);
        let scene = SourceScene::near_field(
            vec![grid.angles()[40]],
            vec![grid.ranges()[10]],
            Coherence::NonCoherent,
            &region,
        )
        .unwrap();
        let mut rng = child_rng(1, 0);
        let x = simulate_snapshots(
            &scene,
            &geom,
            SteeringModel::FresnelQuadratic,
            f64::INFINITY,
            50,
            &mut rng,
        )
        .unwrap();
        let est = localize_2d_music(&x, &geom, &grid, &MusicOptions::known(1)).unwrap();
        assert_eq!(est.num_sources, 1);
        assert!(est.rule.is_none());
        assert_eq!(est.angles_rad[0], grid.angles()[40]);
        assert_eq!(est.ranges_m[0], grid.ranges()[10]);
    }

    #[test]
    fn noiseless_on_grid_sources_recovered_exactly() {
        // Up to three non-coherent noiseless on-grid sources localize to
        // their exact grid cells.
        let geom = geometry();
        let region = fresnel_region(&geom);
        let grid = coarse_grid(&geom);
        let angles = vec![grid.angles()[30], grid.angles()[60], grid.angles()[95]];
        let ranges = vec![grid.ranges()[5], grid.ranges()[20], grid.ranges()[33]];
        let scene =
            SourceScene::near_field(angles.clone(), ranges.clone(), Coherence::NonCoherent, &region)
                .unwrap();
        let mut rng = child_rng(2, 0);
        let x = simulate_snapshots(
            &scene,
            &geom,
            SteeringModel::FresnelQuadratic,
            f64::INFINITY,
            64,
            &mut rng,
        )
        .unwrap();
        let est = localize_2d_music(&x, &geom, &grid, &MusicOptions::known(3)).unwrap();
        let mut got: Vec<(f64, f64)> = est
            .angles_rad
            .iter()
            .zip(&est.ranges_m)
            .map(|(&a, &r)| (a, r))
            .collect();
        got.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut want: Vec<(f64, f64)> = angles.into_iter().zip(ranges).collect();
        want.sort_by(|p, q| p.0.total_cmp(&q.0));
        for ((ga, gr), (wa, wr)) in got.iter().zip(&want) {
            assert_eq!(ga, wa);
            assert_eq!(gr, wr);
        }
    }

    #[test]
    fn mdl_pipeline_estimates_order() {
        let geom = geometry();
        let region = fresnel_region(&geom);
        let grid = coarse_grid(&geom);
        let scene = SourceScene::near_field(
            vec![-0.4, 0.3],
            vec![12.0, 25.0],
            Coherence::NonCoherent,
            &region,
        )
        .unwrap();
        let mut rng = child_rng(3, 0);
        let x = simulate_snapshots(
            &scene,
            &geom,
            SteeringModel::FresnelQuadratic,
            20.0,
            100,
            &mut rng,
        )
        .unwrap();
        let est = localize_2d_music(
            &x,
            &geom,
            &grid,
            &MusicOptions::with_rule(ModelOrderCriterion::Mdl),
        )
        .unwrap();
        assert_eq!(est.num_sources, 2);
        assert_eq!(est.rule, Some(ModelOrderCriterion::Mdl));
    }

    #[test]
    fn smoothing_restores_coherent_pair() {
        let geom = geometry();
        let region = fresnel_region(&geom);
        let grid = coarse_grid(&geom);
        let truth_a = grid.angles()[35];
        let truth_b = grid.angles()[85];
        let scene = SourceScene::near_field(
            vec![truth_a, truth_b],
            vec![grid.ranges()[8], grid.ranges()[25]],
            Coherence::FullyCoherent,
            &region,
        )
        .unwrap();
        let mut rng = child_rng(4, 0);
        let x = simulate_snapshots(
            &scene,
            &geom,
            SteeringModel::FresnelQuadratic,
            30.0,
            100,
            &mut rng,
        )
        .unwrap();
        let est = localize_2d_music(&x, &geom, &grid, &MusicOptions::known(2).coherent())
            .unwrap();
        assert_eq!(est.method, "sps-2d-music");
        let mut got = est.angles_rad.clone();
        got.sort_by(f64::total_cmp);
        assert!((got[0] - truth_a).abs() < 2f64.to_radians());
        assert!((got[1] - truth_b).abs() < 2f64.to_radians());
    }
}

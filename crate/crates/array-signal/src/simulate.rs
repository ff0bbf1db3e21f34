use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::ArraySignalError;
use crate::geometry::ArrayGeometry;
use crate::scene::{Coherence, SourceScene};
use crate::steering::{steering_matrix, SteeringModel};
use crate::Result;

/// `N x T` complex array observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: Array2<Complex64>,
}

impl SnapshotMatrix {
    pub fn new(data: Array2<Complex64>) -> Self {
        Self { data }
    }

    pub fn num_elements(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_snapshots(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }
}

/// Simulates `X = A(theta, rho) S + W` for the scene.
///
/// Sources have unit power; noise is circular complex Gaussian with
/// per-element variance `10^(-snr_db/10)`. Fully coherent scenes share one
/// waveform across all sources.
pub fn simulate_snapshots<R: Rng>(
    scene: &SourceScene,
    geometry: &ArrayGeometry,
    model: SteeringModel,
    snr_db: f64,
    snapshots: usize,
    rng: &mut R,
) -> Result<SnapshotMatrix> {
    simulate_snapshots_at(
        scene,
        scene.ranges(),
        geometry,
        model,
        snr_db,
        snapshots,
        rng,
    )
}

/// Like [`simulate_snapshots`], but synthesizing wavefronts at explicit
/// ranges (used for far-field sources whose label is the sentinel range
/// while the physical source sits beyond the Fraunhofer limit).
pub fn simulate_snapshots_at<R: Rng>(
    scene: &SourceScene,
    physical_ranges_m: &[f64],
    geometry: &ArrayGeometry,
    model: SteeringModel,
    snr_db: f64,
    snapshots: usize,
    rng: &mut R,
) -> Result<SnapshotMatrix> {
    let m = scene.num_sources();
    let n = geometry.num_elements();
    if m >= n {
        return Err(ArraySignalError::InvalidScene(format!(
            "need fewer sources than elements: M={m}, N={n}"
        )));
    }
    if snapshots == 0 {
        return Err(ArraySignalError::Domain("need at least one snapshot".into()));
    }
    if physical_ranges_m.len() != m {
        return Err(ArraySignalError::InvalidScene(format!(
            "expected {m} generation ranges, got {}",
            physical_ranges_m.len()
        )));
    }

    let a = steering_matrix(scene.angles(), physical_ranges_m, geometry, model)?;
    let signals = source_signals(m, snapshots, scene.coherence(), rng);
    let noise_var = 10f64.powf(-snr_db / 10.0);
    let mut x = a.dot(&signals);
    if noise_var > 0.0 {
        let scale = (noise_var / 2.0).sqrt();
        for v in x.iter_mut() {
            *v += Complex64::new(
                scale * std_normal(rng),
                scale * std_normal(rng),
            );
        }
    }
    Ok(SnapshotMatrix::new(x))
}

fn std_normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Unit-variance circular complex Gaussian source waveforms (`M x T`).
fn source_signals<R: Rng>(
    m: usize,
    snapshots: usize,
    coherence: Coherence,
    rng: &mut R,
) -> Array2<Complex64> {
    let scale = (0.5f64).sqrt();
    match coherence {
        Coherence::NonCoherent => Array2::from_shape_fn((m, snapshots), |_| {
            Complex64::new(
                scale * std_normal(rng),
                scale * std_normal(rng),
            )
        }),
        Coherence::FullyCoherent => {
            let shared: Vec<Complex64> = (0..snapshots)
                .map(|_| {
                    Complex64::new(
                        scale * std_normal(rng),
                        scale * std_normal(rng),
                    )
                })
                .collect();
            Array2::from_shape_fn((m, snapshots), |(_, t)| shared[t])
        }
    }
}

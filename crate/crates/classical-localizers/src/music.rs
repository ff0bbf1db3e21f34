use ndarray::{Array1, Array2};
use num_complex::Complex64;

use array_signal::{steering_vector, ArrayGeometry, SteeringModel};

use crate::error::LocalizerError;
use crate::grid::SearchGrid;
use crate::instrument;
use crate::Result;

/// Pseudo-spectrum over a 2D angle-range grid, `values[(angle, range)]`.
#[derive(Debug, Clone)]
pub struct Spectrum2D {
    pub values: Array2<f64>,
    pub grid: SearchGrid,
}

/// `P(theta, rho) = ||U_W^H a(theta, rho)||^{-2}` over the grid.
///
/// `noise_subspace` is `N x (N - M)` with orthonormal columns; the spectrum
/// depends on it only through its projector, so any unitary re-basis leaves
/// the values unchanged.
pub fn music_spectrum_2d(
    noise_subspace: &Array2<Complex64>,
    grid: &SearchGrid,
    geometry: &ArrayGeometry,
    model: SteeringModel,
) -> Result<Spectrum2D> {
    validate_noise_subspace(noise_subspace, geometry)?;
    let mut values = Array2::zeros((grid.angles().len(), grid.ranges().len()));
    for (ai, &theta) in grid.angles().iter().enumerate() {
        for (ri, &rho) in grid.ranges().iter().enumerate() {
            let a = steering_vector(theta, rho, geometry, model)?;
            values[(ai, ri)] = inverse_projection_power(noise_subspace, &a);
        }
    }
    instrument::record_cells(grid.num_cells() as u64);
    Ok(Spectrum2D {
        values,
        grid: grid.clone(),
    })
}

/// 1D range spectrum at a fixed angle, plus its peak.
///
/// Returns `(rho_hat, far_field, spectrum)`; the far-field flag is raised
/// when the argmax lands on the last axis cell. Ties break toward the first
/// cell.
pub fn range_music_1d(
    noise_subspace: &Array2<Complex64>,
    theta_rad: f64,
    range_axis_m: &[f64],
    geometry: &ArrayGeometry,
    model: SteeringModel,
) -> Result<(f64, bool, Array1<f64>)> {
    if range_axis_m.is_empty() {
        return Err(LocalizerError::Domain("empty range axis".into()));
    }
    validate_noise_subspace(noise_subspace, geometry)?;
    let mut spectrum = Array1::zeros(range_axis_m.len());
    for (ri, &rho) in range_axis_m.iter().enumerate() {
        let a = steering_vector(theta_rad, rho, geometry, model)?;
        spectrum[ri] = inverse_projection_power(noise_subspace, &a);
    }
    instrument::record_cells(range_axis_m.len() as u64);
    let mut best = 0usize;
    for i in 1..spectrum.len() {
        if spectrum[i] > spectrum[best] {
            best = i;
        }
    }
    let far_field = best == range_axis_m.len() - 1;
    Ok((range_axis_m[best], far_field, spectrum))
}

pub(crate) fn inverse_projection_power(
    noise_subspace: &Array2<Complex64>,
    steering: &Array1<Complex64>,
) -> f64 {
    let mut power = 0.0f64;
    for col in noise_subspace.columns() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (u, a) in col.iter().zip(steering.iter()) {
            acc += u.conj() * a;
        }
        power += acc.norm_sqr();
    }
    1.0 / power.max(1e-300)
}

fn validate_noise_subspace(
    noise_subspace: &Array2<Complex64>,
    geometry: &ArrayGeometry,
) -> Result<()> {
    if noise_subspace.ncols() == 0 {
        return Err(LocalizerError::Domain(
            "empty noise subspace (M equals the array size)".into(),
        ));
    }
    if noise_subspace.nrows() != geometry.num_elements() {
        return Err(LocalizerError::Domain(format!(
            "noise subspace has {} rows for an array of {} elements",
            noise_subspace.nrows(),
            geometry.num_elements()
        )));
    }
    Ok(())
}

/// CSV rendering: header row carries the range axis, each following row is
/// an angle followed by the spectrum values at that angle.
pub fn spectrum_to_csv(spectrum: &Spectrum2D) -> String {
    let mut out = String::new();
    out.push_str("angle_rad\\range_m");
    for r in spectrum.grid.ranges() {
        out.push_str(&format!(",{r}"));
    }
    out.push('\n');
    for (ai, &theta) in spectrum.grid.angles().iter().enumerate() {
        out.push_str(&format!("{theta}"));
        for ri in 0..spectrum.grid.ranges().len() {
            out.push_str(&format!(",{}", spectrum.values[(ai, ri)]));
        }
        out.push('\n');
    }
    out
}

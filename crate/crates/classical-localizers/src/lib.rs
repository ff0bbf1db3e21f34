//! Model-based localization: 2D near-field MUSIC, far-field ESPRIT,
//! per-angle 1D range MUSIC, peak finding, and beampattern synthesis.

mod beampattern;
mod error;
mod esprit;
mod grid;
pub mod instrument;
mod music;
mod peaks;
mod pipeline;

pub use beampattern::{beampattern, BeampatternKind};
pub use error::LocalizerError;
pub use esprit::{esprit_doa, esprit_doa_from_signal_subspace, rotation_operator};
pub use grid::SearchGrid;
pub use music::{music_spectrum_2d, range_music_1d, spectrum_to_csv, Spectrum2D};
pub use peaks::find_peaks_2d;
pub use pipeline::{localize_2d_music, Estimate, MusicOptions};

pub type Result<T> = std::result::Result<T, LocalizerError>;

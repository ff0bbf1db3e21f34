//! Spectrum-evaluation accounting.
//!
//! Every steering-vector projection evaluated by a MUSIC grid search bumps a
//! global counter, so tests and the complexity report can assert structural
//! contracts (a decoupled pipeline must evaluate exactly `M * G_R` cells and
//! never touch a 2D grid).

use std::sync::atomic::{AtomicU64, Ordering};

static SPECTRUM_CELL_EVALS: AtomicU64 = AtomicU64::new(0);

pub(crate) fn record_cells(count: u64) {
    SPECTRUM_CELL_EVALS.fetch_add(count, Ordering::Relaxed);
}

/// Total grid cells evaluated since the last reset.
pub fn spectrum_cells_evaluated() -> u64 {
    SPECTRUM_CELL_EVALS.load(Ordering::Relaxed)
}

pub fn reset_spectrum_cell_counter() {
    SPECTRUM_CELL_EVALS.store(0, Ordering::Relaxed);
}

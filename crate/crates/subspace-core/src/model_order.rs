use serde::{Deserialize, Serialize};

use crate::eigen::EigenDecomposition;

/// Eigenvalue floor applied before logarithms; surrogate covariances can be
/// numerically rank-deficient.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// How the number of sources is read off an eigen-spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelOrderCriterion {
    /// Count eigenvalues above a fixed threshold.
    Threshold(f64),
    /// Minimum description length: information criterion with `zeta = ln T`.
    Mdl,
    /// Akaike information criterion: `zeta = 2`.
    Aic,
}

/// Penalty flavor shared by the information criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PenaltyRule {
    Mdl,
    Aic,
}

impl PenaltyRule {
    fn zeta(self, snapshots: usize) -> f64 {
        match self {
            PenaltyRule::Mdl => (snapshots as f64).ln(),
            PenaltyRule::Aic => 2.0,
        }
    }
}

/// Information-criterion objective evaluated at candidate order `m`:
/// sphericity of the trailing eigenvalues plus the parameter-count penalty
/// `(m (2N - m) + 1) / 2 * zeta(T)`. The count is the classical one for this
/// test; it grows monotonically in `m`, which the sphericity term alone
/// cannot enforce.
pub fn ic_objective(eigenvalues: &[f64], m: usize, snapshots: usize, rule: PenaltyRule) -> f64 {
    let n = eigenvalues.len();
    assert!(m < n);
    let t = snapshots as f64;
    let noise = &eigenvalues[m..];
    let k = noise.len() as f64;
    let log_sum: f64 = noise.iter().map(|&l| l.max(EIGENVALUE_FLOOR).ln()).sum();
    let mean: f64 = noise.iter().map(|&l| l.max(EIGENVALUE_FLOOR)).sum::<f64>() / k;
    let sphericity = -t * log_sum + t * k * mean.ln();
    let params = m as f64 * (2.0 * n as f64 - m as f64) + 1.0;
    let penalty = 0.5 * params * rule.zeta(snapshots);
    sphericity + penalty
}

/// Estimated number of sources in `0..=N-1`.
///
/// Thresholding counts dominant eigenvalues; the information criteria take
/// the argmin of [`ic_objective`], breaking ties toward the smaller order.
pub fn estimate_num_sources(
    eig: &EigenDecomposition,
    snapshots: usize,
    rule: ModelOrderCriterion,
) -> usize {
    let lambda = &eig.eigenvalues;
    match rule {
        ModelOrderCriterion::Threshold(cut) => lambda
            .iter()
            .filter(|&&l| l > cut)
            .count()
            .min(lambda.len() - 1),
        ModelOrderCriterion::Mdl => argmin_order(lambda, snapshots, PenaltyRule::Mdl),
        ModelOrderCriterion::Aic => argmin_order(lambda, snapshots, PenaltyRule::Aic),
    }
}

fn argmin_order(eigenvalues: &[f64], snapshots: usize, rule: PenaltyRule) -> usize {
    let mut best = 0usize;
    let mut best_value = f64::INFINITY;
    for m in 0..eigenvalues.len() {
        let value = ic_objective(eigenvalues, m, snapshots, rule);
        if value < best_value {
            best_value = value;
            best = m;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::hermitian_evd_matrix;
    use ndarray::Array2;
    use num_complex::Complex64;

    fn evd_from_spectrum(spectrum: &[f64]) -> EigenDecomposition {
        let n = spectrum.len();
        let mut m = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            m[(i, i)] = Complex64::new(spectrum[i], 0.0);
        }
        hermitian_evd_matrix(&m).unwrap()
    }

    #[test]
    fn threshold_counts_dominant() {
        let eig = evd_from_spectrum(&[1.0, 0.8, 0.01, 0.01, 0.01]);
        assert_eq!(
            estimate_num_sources(&eig, 100, ModelOrderCriterion::Threshold(0.1)),
            2
        );
    }

    #[test]
    fn equal_spectrum_yields_zero_sources() {
        let eig = evd_from_spectrum(&[0.5; 6]);
        assert_eq!(estimate_num_sources(&eig, 100, ModelOrderCriterion::Mdl), 0);
        assert_eq!(estimate_num_sources(&eig, 100, ModelOrderCriterion::Aic), 0);
    }

    #[test]
    fn mdl_matches_brute_force_oracle() {
        // Oracle: independent evaluation of the objective for every M.
        let spectrum = [10.0, 1.0, 1.0, 1.0, 1.0];
        let t = 100usize;
        let n = spectrum.len() as f64;
        let mut objectives = Vec::new();
        for m in 0..5 {
            let noise = &spectrum[m..];
            let k = noise.len() as f64;
            let spher = -(t as f64) * noise.iter().map(|l: &f64| l.ln()).sum::<f64>()
                + (t as f64) * k * (noise.iter().sum::<f64>() / k).ln();
            let pen = 0.5 * (m as f64 * (2.0 * n - m as f64) + 1.0) * (t as f64).ln();
            objectives.push(spher + pen);
        }
        let oracle = objectives
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(oracle, 1);
        let eig = evd_from_spectrum(&spectrum);
        assert_eq!(
            estimate_num_sources(&eig, t, ModelOrderCriterion::Mdl),
            oracle
        );
    }

    #[test]
    fn threshold_monotone_in_cut() {
        let eig = evd_from_spectrum(&[3.0, 2.0, 0.4, 0.1, 0.02]);
        let mut last = usize::MAX;
        for cut in [0.01, 0.05, 0.3, 1.0, 2.5, 10.0] {
            let m = estimate_num_sources(&eig, 50, ModelOrderCriterion::Threshold(cut));
            assert!(m <= last);
            last = m;
        }
    }

    #[test]
    fn mdl_never_exceeds_aic_for_long_trajectories() {
        // For ln T > 2 the MDL penalty dominates, so its order is smaller.
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let n = rng.gen_range(3..10);
            let mut spectrum: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..5.0)).collect();
            spectrum.sort_by(|a, b| b.total_cmp(a));
            let t = rng.gen_range(8..1000);
            let eig = evd_from_spectrum(&spectrum);
            let mdl = estimate_num_sources(&eig, t, ModelOrderCriterion::Mdl);
            let aic = estimate_num_sources(&eig, t, ModelOrderCriterion::Aic);
            assert!(mdl <= aic, "spectrum {spectrum:?} T={t}: MDL {mdl} > AIC {aic}");
        }
    }

    #[test]
    fn scaling_leaves_argmin_unchanged() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let n = rng.gen_range(3..9);
            let mut spectrum: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..5.0)).collect();
            spectrum.sort_by(|a, b| b.total_cmp(a));
            let scaled: Vec<f64> = spectrum.iter().map(|l| l * 37.5).collect();
            let t = rng.gen_range(8..500);
            for rule in [ModelOrderCriterion::Mdl, ModelOrderCriterion::Aic] {
                let a = estimate_num_sources(&evd_from_spectrum(&spectrum), t, rule);
                let b = estimate_num_sources(&evd_from_spectrum(&scaled), t, rule);
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn realistic_noise_spread_keeps_true_order() {
        // Sample noise eigenvalues are never exactly flat; the criterion must
        // not drift to the N-1 edge where the sphericity term vanishes.
        let spectrum = [12.0, 8.0, 1.21, 1.1, 1.05, 0.97, 0.9, 0.84];
        let eig = evd_from_spectrum(&spectrum);
        assert_eq!(estimate_num_sources(&eig, 100, ModelOrderCriterion::Mdl), 2);
        assert_eq!(estimate_num_sources(&eig, 100, ModelOrderCriterion::Aic), 2);
    }
}

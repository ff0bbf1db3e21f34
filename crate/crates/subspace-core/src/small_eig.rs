use ndarray::Array2;
use num_complex::Complex64;

use crate::error::SubspaceError;
use crate::Result;

/// Eigen-decomposition of a small general complex matrix.
///
/// Values are sorted by phase (ascending); `right` holds unit right
/// eigenvectors as columns and `right_inv` its inverse, whose rows are the
/// left eigenvectors scaled so that `v_i^H u_i = 1`. Intended for the
/// rotation operators arising in shift-invariance methods (dimension <= 8);
/// matrices with (near-)defective spectra are reported as numeric errors.
#[derive(Debug, Clone)]
pub struct SmallEig {
    pub values: Vec<Complex64>,
    pub right: Array2<Complex64>,
    pub right_inv: Array2<Complex64>,
}

pub fn small_eig(a: &Array2<Complex64>) -> Result<SmallEig> {
    let n = a.nrows();
    if n == 0 || n != a.ncols() {
        return Err(SubspaceError::Dimension(format!(
            "expected nonempty square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(SubspaceError::Numeric("non-finite matrix entry".into()));
    }
    if n == 1 {
        return Ok(SmallEig {
            values: vec![a[(0, 0)]],
            right: Array2::from_elem((1, 1), Complex64::new(1.0, 0.0)),
            right_inv: Array2::from_elem((1, 1), Complex64::new(1.0, 0.0)),
        });
    }

    let coeffs = characteristic_polynomial(a);
    let mut values = durand_kerner(&coeffs);
    values.sort_by(|x, y| x.arg().total_cmp(&y.arg()));

    let scale = a.iter().map(|v| v.norm()).fold(0.0f64, f64::max).max(1e-300);
    let mut right = Array2::<Complex64>::zeros((n, n));
    for (k, &mu) in values.iter().enumerate() {
        let u = eigenvector_for(a, mu, scale)?;
        for i in 0..n {
            right[(i, k)] = u[i];
        }
    }
    let right_inv = invert(&right).ok_or_else(|| {
        SubspaceError::Numeric("eigenvector matrix is numerically singular".into())
    })?;

    // one Rayleigh-style refinement: diag(U^{-1} A U) is second-order accurate
    let au = a.dot(&right);
    for k in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            acc += right_inv[(k, j)] * au[(j, k)];
        }
        values[k] = acc;
    }

    Ok(SmallEig {
        values,
        right,
        right_inv,
    })
}

/// Monic characteristic polynomial coefficients `[c_1, ..., c_n]` of
/// `z^n + c_1 z^(n-1) + ... + c_n`, via the Faddeev-LeVerrier recursion.
fn characteristic_polynomial(a: &Array2<Complex64>) -> Vec<Complex64> {
    let n = a.nrows();
    let eye = Array2::from_shape_fn((n, n), |(i, j)| {
        Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
    });
    let mut coeffs = Vec::with_capacity(n);
    let mut m = a.clone();
    let mut c = -trace(&m);
    coeffs.push(c);
    for k in 2..=n {
        let shifted = &m + &eye.mapv(|e| e * c);
        m = a.dot(&shifted);
        c = -trace(&m) / k as f64;
        coeffs.push(c);
    }
    coeffs
}

fn trace(m: &Array2<Complex64>) -> Complex64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// Simultaneous root iteration for a monic polynomial with coefficients
/// `[c_1, ..., c_n]`.
fn durand_kerner(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    let radius = 1.0 + coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n)
        .map(|k| seed.powu(k as u32 + 1) * radius)
        .collect();
    let eval = |z: Complex64| -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for &c in coeffs {
            p = p * z + c;
        }
        p
    };
    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-280 {
                continue;
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm() / (1.0 + roots[i].norm()));
        }
        if max_step < 1e-15 {
            break;
        }
    }
    roots
}

/// Right eigenvector via inverse iteration against a minutely shifted pole.
fn eigenvector_for(a: &Array2<Complex64>, mu: Complex64, scale: f64) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    // shift keeps the system solvable when (A - mu I) is exactly singular
    let shifted_mu = mu + Complex64::new(1e-12 * scale, 1e-13 * scale);
    let mut b = a.clone();
    for i in 0..n {
        b[(i, i)] -= shifted_mu;
    }
    let lu = LuFactors::new(&b)
        .ok_or_else(|| SubspaceError::Numeric("singular shift in inverse iteration".into()))?;
    // deterministic start with energy in every coordinate
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.13 * i as f64, 0.37 - 0.11 * i as f64))
        .collect();
    for _ in 0..3 {
        let mut w = lu.solve(&v);
        let norm: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(SubspaceError::Numeric(
                "inverse iteration diverged".into(),
            ));
        }
        for z in &mut w {
            *z /= norm;
        }
        v = w;
    }
    // fix the gauge: largest component real positive
    let k = (0..n)
        .max_by(|&i, &j| v[i].norm().total_cmp(&v[j].norm()))
        .unwrap();
    let phase = v[k] / v[k].norm();
    for z in &mut v {
        *z /= phase;
    }
    Ok(v)
}

struct LuFactors {
    lu: Array2<Complex64>,
    pivots: Vec<usize>,
}

impl LuFactors {
    /// Partial-pivoting LU; `None` when a pivot underflows.
    fn new(a: &Array2<Complex64>) -> Option<Self> {
        let n = a.nrows();
        let mut lu = a.clone();
        let mut pivots = Vec::with_capacity(n);
        for col in 0..n {
            let mut best = col;
            for row in col + 1..n {
                if lu[(row, col)].norm() > lu[(best, col)].norm() {
                    best = row;
                }
            }
            if lu[(best, col)].norm() < 1e-300 {
                return None;
            }
            if best != col {
                for j in 0..n {
                    let tmp = lu[(col, j)];
                    lu[(col, j)] = lu[(best, j)];
                    lu[(best, j)] = tmp;
                }
            }
            pivots.push(best);
            let pivot = lu[(col, col)];
            for row in col + 1..n {
                let factor = lu[(row, col)] / pivot;
                lu[(row, col)] = factor;
                for j in col + 1..n {
                    let sub = factor * lu[(col, j)];
                    lu[(row, j)] -= sub;
                }
            }
        }
        Some(Self { lu, pivots })
    }

    fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = rhs.len();
        let mut y = rhs.to_vec();
        for (col, &p) in self.pivots.iter().enumerate() {
            y.swap(col, p);
        }
        for col in 0..n {
            for row in col + 1..n {
                let sub = self.lu[(row, col)] * y[col];
                y[row] -= sub;
            }
        }
        for col in (0..n).rev() {
            for j in col + 1..n {
                let sub = self.lu[(col, j)] * y[j];
                y[col] -= sub;
            }
            y[col] /= self.lu[(col, col)];
        }
        y
    }
}

/// Inverse via LU column solves; `None` when singular.
pub(crate) fn invert(a: &Array2<Complex64>) -> Option<Array2<Complex64>> {
    let n = a.nrows();
    let lu = LuFactors::new(a)?;
    let mut inv = Array2::<Complex64>::zeros((n, n));
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    for col in 0..n {
        e[col] = Complex64::new(1.0, 0.0);
        let x = lu.solve(&e);
        e[col] = Complex64::new(0.0, 0.0);
        for row in 0..n {
            inv[(row, col)] = x[row];
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn random_matrix(n: usize, seed: u64) -> Array2<Complex64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, n), |_| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        })
    }

    #[test]
    fn diagonal_matrix_recovers_entries() {
        let mut a = Array2::<Complex64>::zeros((3, 3));
        a[(0, 0)] = Complex64::new(0.0, 1.0);
        a[(1, 1)] = Complex64::new(1.0, 0.0);
        a[(2, 2)] = Complex64::new(-1.0, 0.5);
        let eig = small_eig(&a).unwrap();
        let mut phases: Vec<f64> = eig.values.iter().map(|v| v.arg()).collect();
        let sorted = phases.clone();
        phases.sort_by(f64::total_cmp);
        assert_eq!(phases, sorted, "values must arrive phase-sorted");
        for target in [
            Complex64::new(0.0, 1.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.5),
        ] {
            assert!(
                eig.values.iter().any(|v| (v - target).norm() < 1e-10),
                "missing {target}"
            );
        }
    }

    #[test]
    fn eigen_pairs_satisfy_defining_equation() {
        for seed in 0..10u64 {
            for n in [2usize, 3, 5, 8] {
                let a = random_matrix(n, 100 + seed * 10 + n as u64);
                let eig = match small_eig(&a) {
                    Ok(e) => e,
                    Err(_) => continue, // skip the rare near-defective draw
                };
                let au = a.dot(&eig.right);
                for k in 0..n {
                    for i in 0..n {
                        let res = au[(i, k)] - eig.values[k] * eig.right[(i, k)];
                        assert!(
                            res.norm() < 1e-8,
                            "n={n} seed={seed}: residual {:.2e}",
                            res.norm()
                        );
                    }
                }
                // right_inv really inverts
                let id = eig.right_inv.dot(&eig.right);
                for i in 0..n {
                    for j in 0..n {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!((id[(i, j)] - expect).norm() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn unimodular_rotation_spectrum_is_exact() {
        // G^{-1} D G with unimodular D: the shape of rotation operators in
        // shift-invariance methods.
        let phases = [0.3f64, -1.1, 2.0];
        let mut d = Array2::<Complex64>::zeros((3, 3));
        for (i, &p) in phases.iter().enumerate() {
            d[(i, i)] = Complex64::from_polar(1.0, p);
        }
        let g = random_matrix(3, 77);
        let g_inv = invert(&g).unwrap();
        let a = g_inv.dot(&d).dot(&g);
        let eig = small_eig(&a).unwrap();
        let mut got: Vec<f64> = eig.values.iter().map(|v| v.arg()).collect();
        got.sort_by(f64::total_cmp);
        let mut want = phases.to_vec();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9, "phase {g} vs {w}");
        }
        for v in &eig.values {
            assert!((v.norm() - 1.0).abs() < 1e-9);
        }
    }
}

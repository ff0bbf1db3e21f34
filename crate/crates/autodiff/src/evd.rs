//! Differentiable Hermitian eigendecomposition.
//!
//! Forward is the shared eigensolver; backward uses the first-order
//! perturbation rules `dlambda_i = u_i^H dR u_i` and
//! `du_i = sum_{j != i} u_j (u_j^H dR u_i) / (lambda_i - lambda_j)`, with the
//! pairwise factors clamped in magnitude. The final Hermitian projection
//! cancels within-subspace degeneracy terms for projector-invariant losses,
//! so the clamp only matters across the signal/noise gap.

use ndarray::Array2;
use num_complex::Complex64;
use std::rc::Rc;

use subspace_core::hermitian_evd_matrix;

use crate::complexops::{imag_as_complex, real_as_complex, split, CVar};
use crate::error::AutodiffError;
use crate::tape::{NodeValues, Tensor, Var};
use crate::Result;

const GAP_FACTOR_LIMIT: f64 = 1e6;

struct EvdContext {
    eigenvectors: Array2<Complex64>,
    eigenvalues: Vec<f64>,
}

/// Eigen-decomposition of a Hermitian matrix given as a (re, im) pair.
/// Returns descending eigenvalues and the matched eigenvector matrix.
pub fn hermitian_evd_pair(r: &CVar) -> Result<(Var, CVar)> {
    let shape = r.shape();
    if shape.len() != 2 || shape[0] != shape[1] {
        return Err(AutodiffError::Shape(format!(
            "hermitian_evd_pair needs a square matrix, got {shape:?}"
        )));
    }
    let m = r.to_matrix();
    let evd = hermitian_evd_matrix(&m)?;
    let ctx = Rc::new(EvdContext {
        eigenvectors: evd.eigenvectors,
        eigenvalues: evd.eigenvalues,
    });
    let tape = r.re.tape().clone();
    let parents = vec![r.re.idx, r.im.idx];
    let n = shape[0];

    let ctx_l = Rc::clone(&ctx);
    let backward_lambda = move |g: &Tensor, _: &NodeValues<'_>| {
        let gl: Vec<f64> = g.iter().copied().collect();
        split(evd_input_grad(&ctx_l, Some(&gl), None))
    };
    let lambda = tape.push_node(
        Tensor::from_shape_vec(ndarray::IxDyn(&[n]), ctx.eigenvalues.clone()).unwrap(),
        parents.clone(),
        Some(Box::new(backward_lambda)),
        false,
    );

    let ctx_re = Rc::clone(&ctx);
    let backward_u_re = move |g: &Tensor, _: &NodeValues<'_>| {
        split(evd_input_grad(&ctx_re, None, Some(&real_as_complex(g))))
    };
    let u_re = tape.push_node(
        ctx.eigenvectors.mapv(|v| v.re).into_dyn(),
        parents.clone(),
        Some(Box::new(backward_u_re)),
        false,
    );

    let ctx_im = Rc::clone(&ctx);
    let backward_u_im = move |g: &Tensor, _: &NodeValues<'_>| {
        split(evd_input_grad(&ctx_im, None, Some(&imag_as_complex(g))))
    };
    let u_im = tape.push_node(
        ctx.eigenvectors.mapv(|v| v.im).into_dyn(),
        parents,
        Some(Box::new(backward_u_im)),
        false,
    );

    Ok((lambda, CVar::from_parts(u_re, u_im)?))
}

/// `G = U (diag(g_lambda) + F . (U^H g_U)) U^H`, Hermitian-projected, where
/// `F_ij = 1 / (lambda_j - lambda_i)` off the diagonal.
fn evd_input_grad(
    ctx: &EvdContext,
    g_lambda: Option<&[f64]>,
    g_u: Option<&Array2<Complex64>>,
) -> Array2<Complex64> {
    let u = &ctx.eigenvectors;
    let n = ctx.eigenvalues.len();
    let mut core = Array2::<Complex64>::zeros((n, n));
    if let Some(gl) = g_lambda {
        for i in 0..n {
            core[(i, i)] = Complex64::new(gl[i], 0.0);
        }
    }
    if let Some(gu) = g_u {
        let uh = u.mapv(|v| v.conj()).reversed_axes();
        let b = uh.dot(gu);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let gap = ctx.eigenvalues[j] - ctx.eigenvalues[i];
                let mut factor = 1.0 / gap;
                if !factor.is_finite() || factor.abs() > GAP_FACTOR_LIMIT {
                    factor = GAP_FACTOR_LIMIT * factor.signum();
                    if !factor.is_finite() {
                        factor = GAP_FACTOR_LIMIT;
                    }
                }
                core[(i, j)] += b[(i, j)] * factor;
            }
        }
    }
    let uh = u.mapv(|v| v.conj()).reversed_axes();
    let g = u.dot(&core).dot(&uh);
    // Hermitian projection
    let gh = g.mapv(|v| v.conj()).reversed_axes();
    (&g + &gh).mapv(|v| 0.5 * v)
}

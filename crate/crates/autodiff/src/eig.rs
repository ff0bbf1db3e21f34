//! Differentiable eigenvalues of a small general complex matrix (the
//! rotation operator of shift-invariance angle estimation).
//!
//! Forward is the dense small-matrix eigensolver; backward applies the
//! two-sided perturbation rule `d mu_i = v_i^H dPhi u_i` with left
//! eigenvectors taken from the inverse of the right-eigenvector matrix.

use ndarray::Array2;
use num_complex::Complex64;
use std::rc::Rc;

use subspace_core::small_eig;

use crate::complexops::{split, CVar};
use crate::error::AutodiffError;
use crate::tape::{NodeValues, Tensor, Var};
use crate::Result;

struct EigContext {
    right: Array2<Complex64>,
    right_inv: Array2<Complex64>,
}

/// Eigenvalues of a general complex matrix as (re, im) vector nodes, sorted
/// by phase ascending. Gradients flow through simple (non-defective)
/// spectra; training fixtures keep phases separated.
pub fn eig_values_pair(phi: &CVar) -> Result<(Var, Var)> {
    let shape = phi.shape();
    if shape.len() != 2 || shape[0] != shape[1] {
        return Err(AutodiffError::Shape(format!(
            "eig_values_pair needs a square matrix, got {shape:?}"
        )));
    }
    let m = phi.to_matrix();
    let eig = small_eig(&m)?;
    let n = shape[0];
    let ctx = Rc::new(EigContext {
        right: eig.right,
        right_inv: eig.right_inv,
    });
    let tape = phi.re.tape().clone();
    let parents = vec![phi.re.idx, phi.im.idx];

    let ctx_re = Rc::clone(&ctx);
    let backward_re = move |g: &Tensor, _: &NodeValues<'_>| {
        let c: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        split(phi_grad(&ctx_re, &c))
    };
    let mu_re = tape.push_node(
        Tensor::from_shape_vec(
            ndarray::IxDyn(&[n]),
            eig.values.iter().map(|v| v.re).collect(),
        )
        .unwrap(),
        parents.clone(),
        Some(Box::new(backward_re)),
        false,
    );

    let ctx_im = Rc::clone(&ctx);
    let backward_im = move |g: &Tensor, _: &NodeValues<'_>| {
        let c: Vec<Complex64> = g.iter().map(|&v| Complex64::new(0.0, v)).collect();
        split(phi_grad(&ctx_im, &c))
    };
    let mu_im = tape.push_node(
        Tensor::from_shape_vec(
            ndarray::IxDyn(&[n]),
            eig.values.iter().map(|v| v.im).collect(),
        )
        .unwrap(),
        parents,
        Some(Box::new(backward_im)),
        false,
    );
    Ok((mu_re, mu_im))
}

/// `gPhi = (U diag(conj(c)) U^{-1})^H` for per-eigenvalue cotangents `c`.
fn phi_grad(ctx: &EigContext, c: &[Complex64]) -> Array2<Complex64> {
    let n = c.len();
    let mut core = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        core[(i, i)] = c[i].conj();
    }
    let g = ctx.right.dot(&core).dot(&ctx.right_inv);
    g.mapv(|v| v.conj()).reversed_axes().to_owned()
}

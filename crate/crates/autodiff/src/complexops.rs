//! Complex matrices as pairs of real tape nodes.

use ndarray::{Array2, IxDyn};
use num_complex::Complex64;

use subspace_core::invert_matrix;

use crate::error::AutodiffError;
use crate::ops;
use crate::tape::{NodeValues, Tape, Tensor, Var};
use crate::Result;

/// Complex matrix on the tape: real and imaginary channels share a shape.
#[derive(Clone)]
pub struct CVar {
    pub re: Var,
    pub im: Var,
}

impl CVar {
    pub fn from_parts(re: Var, im: Var) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(AutodiffError::Shape(format!(
                "re/im shapes differ: {:?} vs {:?}",
                re.shape(),
                im.shape()
            )));
        }
        crate::tape::check_same_tape(&re, &im)?;
        Ok(Self { re, im })
    }

    /// Constant complex matrix (no gradient).
    pub fn constant(tape: &Tape, m: &Array2<Complex64>) -> Self {
        let re = tape.constant(m.mapv(|v| v.re).into_dyn());
        let im = tape.constant(m.mapv(|v| v.im).into_dyn());
        Self { re, im }
    }

    pub fn shape(&self) -> Vec<usize> {
        self.re.shape()
    }

    /// Current value as a complex matrix (2-D nodes only).
    pub fn to_matrix(&self) -> Array2<Complex64> {
        let re = self.re.value();
        let im = self.im.value();
        let re2 = re.view().into_dimensionality::<ndarray::Ix2>().unwrap();
        let im2 = im.view().into_dimensionality::<ndarray::Ix2>().unwrap();
        Array2::from_shape_fn(re2.raw_dim(), |(i, j)| {
            Complex64::new(re2[(i, j)], im2[(i, j)])
        })
    }

    /// Complex matrix product (four real products).
    pub fn matmul(&self, other: &CVar) -> Result<CVar> {
        let rr = ops::matmul(&self.re, &other.re)?;
        let ii = ops::matmul(&self.im, &other.im)?;
        let ri = ops::matmul(&self.re, &other.im)?;
        let ir = ops::matmul(&self.im, &other.re)?;
        CVar::from_parts(ops::sub(&rr, &ii)?, ops::add(&ri, &ir)?)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Result<CVar> {
        CVar::from_parts(
            ops::transpose2d(&self.re)?,
            ops::neg(&ops::transpose2d(&self.im)?)?,
        )
    }

    pub fn add(&self, other: &CVar) -> Result<CVar> {
        CVar::from_parts(
            ops::add(&self.re, &other.re)?,
            ops::add(&self.im, &other.im)?,
        )
    }

    /// Scale by a real scalar node (broadcast).
    pub fn scale_by(&self, s: &Var) -> Result<CVar> {
        CVar::from_parts(ops::mul(&self.re, s)?, ops::mul(&self.im, s)?)
    }

    /// Divide by a real scalar node (broadcast).
    pub fn div_by(&self, s: &Var) -> Result<CVar> {
        CVar::from_parts(ops::div(&self.re, s)?, ops::div(&self.im, s)?)
    }

    /// Add `eps * I` to a square complex matrix.
    pub fn add_scaled_identity(&self, eps: f64) -> Result<CVar> {
        let shape = self.shape();
        if shape.len() != 2 || shape[0] != shape[1] {
            return Err(AutodiffError::Shape(format!(
                "identity shift needs a square matrix, got {shape:?}"
            )));
        }
        let n = shape[0];
        let mut eye = Tensor::zeros(IxDyn(&[n, n]));
        for i in 0..n {
            eye[[i, i]] = eps;
        }
        let eye = self.re.tape().constant(eye);
        CVar::from_parts(ops::add(&self.re, &eye)?, self.im.clone())
    }

    /// Columns `[start, start+len)`.
    pub fn narrow_cols(&self, start: usize, len: usize) -> Result<CVar> {
        CVar::from_parts(
            ops::narrow(&self.re, 1, start, len)?,
            ops::narrow(&self.im, 1, start, len)?,
        )
    }

    /// Rows `[start, start+len)`.
    pub fn narrow_rows(&self, start: usize, len: usize) -> Result<CVar> {
        CVar::from_parts(
            ops::narrow(&self.re, 0, start, len)?,
            ops::narrow(&self.im, 0, start, len)?,
        )
    }

    /// Squared Frobenius norm as a real scalar node.
    pub fn frobenius_sq(&self) -> Result<Var> {
        let rr = ops::dot(&self.re, &self.re)?;
        let ii = ops::dot(&self.im, &self.im)?;
        ops::add(&rr, &ii)
    }
}

/// Differentiable inverse of a square complex matrix.
pub fn cinv(a: &CVar) -> Result<CVar> {
    let m = a.to_matrix();
    if m.nrows() != m.ncols() {
        return Err(AutodiffError::Shape(format!(
            "cinv needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let inv = invert_matrix(&m)
        .ok_or_else(|| AutodiffError::Numeric("cinv of a singular matrix".into()))?;
    let tape = a.re.tape().clone();
    let parents = vec![a.re.idx, a.im.idx];
    let inv_for_re = inv.clone();
    let backward_re = move |g: &Tensor, _: &NodeValues<'_>| {
        let gy = real_as_complex(g);
        let ga = inv_backward(&inv_for_re, &gy);
        split(ga)
    };
    let re = tape.push_node(
        inv.mapv(|v| v.re).into_dyn(),
        parents.clone(),
        Some(Box::new(backward_re)),
        false,
    );
    let inv_for_im = inv.clone();
    let backward_im = move |g: &Tensor, _: &NodeValues<'_>| {
        let gy = imag_as_complex(g);
        let ga = inv_backward(&inv_for_im, &gy);
        split(ga)
    };
    let im = tape.push_node(
        inv.mapv(|v| v.im).into_dyn(),
        parents,
        Some(Box::new(backward_im)),
        false,
    );
    CVar::from_parts(re, im)
}

/// `gA = -Y^H gY Y^H` for `Y = A^{-1}`.
fn inv_backward(y: &Array2<Complex64>, gy: &Array2<Complex64>) -> Array2<Complex64> {
    let yh = y.mapv(|v| v.conj()).reversed_axes();
    yh.dot(gy).dot(&yh).mapv(|v| -v)
}

pub(crate) fn real_as_complex(g: &Tensor) -> Array2<Complex64> {
    let g2 = g.view().into_dimensionality::<ndarray::Ix2>().unwrap();
    g2.mapv(|v| Complex64::new(v, 0.0))
}

pub(crate) fn imag_as_complex(g: &Tensor) -> Array2<Complex64> {
    let g2 = g.view().into_dimensionality::<ndarray::Ix2>().unwrap();
    g2.mapv(|v| Complex64::new(0.0, v))
}

pub(crate) fn split(g: Array2<Complex64>) -> Vec<Tensor> {
    vec![g.mapv(|v| v.re).into_dyn(), g.mapv(|v| v.im).into_dyn()]
}

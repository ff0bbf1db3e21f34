//! 2-D convolutions (stride 1, configurable zero padding) via im2col and a
//! matrix product, plus the transposed variant expressed as a convolution
//! with a flipped, channel-swapped kernel.

use ndarray::{Array2, Array3, Array4, IxDyn};

use crate::error::AutodiffError;
use crate::tape::{check_same_tape, NodeValues, Tensor, Var};
use crate::Result;

struct ConvDims {
    c_in: usize,
    h: usize,
    w: usize,
    c_out: usize,
    k: usize,
    h_out: usize,
    w_out: usize,
}

fn conv_dims(x: &Tensor, weight: &Tensor, padding: usize, transposed: bool) -> Result<ConvDims> {
    if x.ndim() != 3 || weight.ndim() != 4 {
        return Err(AutodiffError::Shape(format!(
            "conv expects x[C,H,W], w[Co,Ci,k,k]; got {:?} and {:?}",
            x.shape(),
            weight.shape()
        )));
    }
    let (wc_out, wc_in) = if transposed {
        (weight.shape()[1], weight.shape()[0])
    } else {
        (weight.shape()[0], weight.shape()[1])
    };
    let k = weight.shape()[2];
    if weight.shape()[3] != k {
        return Err(AutodiffError::Shape("only square kernels supported".into()));
    }
    if x.shape()[0] != wc_in {
        return Err(AutodiffError::Shape(format!(
            "input channels {} do not match kernel {}",
            x.shape()[0],
            wc_in
        )));
    }
    let (h, w) = (x.shape()[1], x.shape()[2]);
    if h + 2 * padding < k || w + 2 * padding < k {
        return Err(AutodiffError::Shape(format!(
            "kernel {k} too large for {h}x{w} input with padding {padding}"
        )));
    }
    Ok(ConvDims {
        c_in: wc_in,
        h,
        w,
        c_out: wc_out,
        k,
        h_out: h + 2 * padding - k + 1,
        w_out: w + 2 * padding - k + 1,
    })
}

/// Unfolds the padded input into `[C_in * k * k, H_out * W_out]`.
fn im2col(x: &Tensor, d: &ConvDims, padding: usize) -> Array2<f64> {
    let x3 = x.view().into_dimensionality::<ndarray::Ix3>().unwrap();
    let mut cols = Array2::zeros((d.c_in * d.k * d.k, d.h_out * d.w_out));
    for c in 0..d.c_in {
        for ki in 0..d.k {
            for kj in 0..d.k {
                let row = (c * d.k + ki) * d.k + kj;
                for oi in 0..d.h_out {
                    let ii = oi + ki;
                    if ii < padding || ii >= d.h + padding {
                        continue;
                    }
                    for oj in 0..d.w_out {
                        let jj = oj + kj;
                        if jj < padding || jj >= d.w + padding {
                            continue;
                        }
                        cols[(row, oi * d.w_out + oj)] = x3[(c, ii - padding, jj - padding)];
                    }
                }
            }
        }
    }
    cols
}

/// Folds column gradients back onto the input (adjoint of [`im2col`]).
fn col2im(gcols: &Array2<f64>, d: &ConvDims, padding: usize) -> Tensor {
    let mut gx = Array3::<f64>::zeros((d.c_in, d.h, d.w));
    for c in 0..d.c_in {
        for ki in 0..d.k {
            for kj in 0..d.k {
                let row = (c * d.k + ki) * d.k + kj;
                for oi in 0..d.h_out {
                    let ii = oi + ki;
                    if ii < padding || ii >= d.h + padding {
                        continue;
                    }
                    for oj in 0..d.w_out {
                        let jj = oj + kj;
                        if jj < padding || jj >= d.w + padding {
                            continue;
                        }
                        gx[(c, ii - padding, jj - padding)] += gcols[(row, oi * d.w_out + oj)];
                    }
                }
            }
        }
    }
    gx.into_dyn()
}

fn conv_forward(
    x: &Tensor,
    weight: &Tensor,
    bias: &Tensor,
    padding: usize,
    d: &ConvDims,
) -> (Tensor, Array2<f64>) {
    let cols = im2col(x, d, padding);
    let wmat = weight
        .view()
        .into_shape_with_order((d.c_out, d.c_in * d.k * d.k))
        .unwrap();
    let mut y = wmat.dot(&cols); // [C_out, H_out*W_out]
    for (mut row, b) in y.rows_mut().into_iter().zip(bias.iter()) {
        row.mapv_inplace(|v| v + b);
    }
    let y = y
        .into_shape_with_order((d.c_out, d.h_out, d.w_out))
        .unwrap()
        .into_dyn();
    (y, cols)
}

/// `y[Co, H', W'] = w * x + b` with stride 1 and zero padding.
pub fn conv2d(x: &Var, weight: &Var, bias: &Var, padding: usize) -> Result<Var> {
    check_same_tape(x, weight)?;
    check_same_tape(x, bias)?;
    let xv = x.value();
    let wv = weight.value();
    let bv = bias.value();
    let d = conv_dims(&xv, &wv, padding, false)?;
    if bv.len() != d.c_out {
        return Err(AutodiffError::Shape(format!(
            "bias length {} vs {} output channels",
            bv.len(),
            d.c_out
        )));
    }
    x.tape()
        .add_macs((d.c_out * d.c_in * d.k * d.k * d.h_out * d.w_out) as u64);
    let (y, cols) = conv_forward(&xv, &wv, &bv, padding, &d);
    let (xi, wi) = (x.idx, weight.idx);
    let backward = move |g: &Tensor, vals: &NodeValues<'_>| {
        let d = conv_dims(vals.value(xi), vals.value(wi), padding, false).expect("conv dims");
        let gmat = g
            .view()
            .into_shape_with_order((d.c_out, d.h_out * d.w_out))
            .unwrap();
        let wmat = vals
            .value(wi)
            .view()
            .into_shape_with_order((d.c_out, d.c_in * d.k * d.k))
            .unwrap();
        let gw = gmat
            .dot(&cols.t())
            .into_shape_with_order((d.c_out, d.c_in, d.k, d.k))
            .unwrap()
            .into_dyn();
        let gb = Tensor::from_shape_vec(
            IxDyn(&[d.c_out]),
            gmat.rows().into_iter().map(|r| r.sum()).collect(),
        )
        .unwrap();
        let gcols = wmat.t().dot(&gmat);
        let gx = col2im(&gcols, &d, padding);
        vec![gx, gw, gb]
    };
    Ok(x.tape().push_node(
        y,
        vec![x.idx, weight.idx, bias.idx],
        Some(Box::new(backward)),
        false,
    ))
}

/// Transposed convolution with weights laid out `[C_in, C_out, k, k]`;
/// equivalent to convolving the input padded by `k - 1 - padding` with the
/// spatially flipped, channel-swapped kernel.
pub fn conv2d_transpose(x: &Var, weight: &Var, bias: &Var, padding: usize) -> Result<Var> {
    check_same_tape(x, weight)?;
    check_same_tape(x, bias)?;
    let xv = x.value();
    let wv = weight.value();
    let bv = bias.value();
    let d = conv_dims(&xv, &wv, padding, true)?;
    let k = d.k;
    if padding >= k {
        return Err(AutodiffError::Shape(format!(
            "transposed conv padding {padding} must stay below the kernel size {k}"
        )));
    }
    if bv.len() != d.c_out {
        return Err(AutodiffError::Shape(format!(
            "bias length {} vs {} output channels",
            bv.len(),
            d.c_out
        )));
    }
    let eff_pad = k - 1 - padding;
    let flipped = flip_swap(&wv, d.c_in, d.c_out, k);
    let de = conv_dims(&xv, &flipped.clone().into_dyn(), eff_pad, false)?;
    x.tape()
        .add_macs((de.c_out * de.c_in * k * k * de.h_out * de.w_out) as u64);
    let (y, cols) = conv_forward(&xv, &flipped.clone().into_dyn(), &bv, eff_pad, &de);
    let (xi, wi) = (x.idx, weight.idx);
    let backward = move |g: &Tensor, vals: &NodeValues<'_>| {
        let wv = vals.value(wi);
        let c_in = wv.shape()[0];
        let c_out = wv.shape()[1];
        let flipped = flip_swap(wv, c_in, c_out, k);
        let de = conv_dims(vals.value(xi), &flipped.clone().into_dyn(), eff_pad, false)
            .expect("tconv dims");
        let gmat = g
            .view()
            .into_shape_with_order((de.c_out, de.h_out * de.w_out))
            .unwrap();
        let wmat = flipped
            .view()
            .into_shape_with_order((de.c_out, de.c_in * k * k))
            .unwrap();
        let gwf = gmat.dot(&cols.t());
        let gw = unflip_swap(&gwf, c_in, c_out, k);
        let gb = Tensor::from_shape_vec(
            IxDyn(&[de.c_out]),
            gmat.rows().into_iter().map(|r| r.sum()).collect(),
        )
        .unwrap();
        let gcols = wmat.t().dot(&gmat);
        let gx = col2im(&gcols, &de, eff_pad);
        vec![gx, gw, gb]
    };
    Ok(x.tape().push_node(
        y,
        vec![x.idx, weight.idx, bias.idx],
        Some(Box::new(backward)),
        false,
    ))
}

/// `[C_in, C_out, k, k] -> [C_out, C_in, k, k]` with both spatial axes
/// reversed.
fn flip_swap(w: &Tensor, c_in: usize, c_out: usize, k: usize) -> Array4<f64> {
    let w4 = w.view().into_dimensionality::<ndarray::Ix4>().unwrap();
    Array4::from_shape_fn((c_out, c_in, k, k), |(o, i, a, b)| {
        w4[(i, o, k - 1 - a, k - 1 - b)]
    })
}

/// Adjoint of [`flip_swap`] applied to a flattened kernel gradient.
fn unflip_swap(gwf: &Array2<f64>, c_in: usize, c_out: usize, k: usize) -> Tensor {
    let gwf4 = gwf
        .view()
        .into_shape_with_order((c_out, c_in, k, k))
        .unwrap();
    Array4::from_shape_fn((c_in, c_out, k, k), |(i, o, a, b)| {
        gwf4[(o, i, k - 1 - a, k - 1 - b)]
    })
    .into_dyn()
}

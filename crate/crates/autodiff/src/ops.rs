//! The primitive operation family. Every op validates shapes at graph
//! construction and registers a backward rule; gradients accumulate
//! additively on fan-out.

use ndarray::{Axis, IxDyn, Slice};

use crate::error::AutodiffError;
use crate::tape::{check_same_tape, NodeValues, Tensor, Var};
use crate::Result;

fn is_scalar(t: &Tensor) -> bool {
    t.len() == 1
}

/// Collapses a broadcast gradient back onto a scalar operand when needed.
fn reduce_to_shape(grad: Tensor, shape: &[usize]) -> Tensor {
    if grad.shape() == shape {
        grad
    } else {
        Tensor::from_elem(IxDyn(shape), grad.sum())
    }
}

fn binary_shapes(a: &Tensor, b: &Tensor, op: &str) -> Result<Vec<usize>> {
    if a.shape() == b.shape() {
        Ok(a.shape().to_vec())
    } else if is_scalar(a) {
        Ok(b.shape().to_vec())
    } else if is_scalar(b) {
        Ok(a.shape().to_vec())
    } else {
        Err(AutodiffError::Shape(format!(
            "{op}: incompatible shapes {:?} vs {:?}",
            a.shape(),
            b.shape()
        )))
    }
}

fn broadcast_apply(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    if a.shape() == b.shape() {
        let mut out = a.clone();
        out.zip_mut_with(b, |x, &y| *x = f(*x, y));
        out
    } else if is_scalar(a) {
        let av = *a.iter().next().unwrap();
        b.mapv(|y| f(av, y))
    } else {
        let bv = *b.iter().next().unwrap();
        a.mapv(|x| f(x, bv))
    }
}

pub fn add(a: &Var, b: &Var) -> Result<Var> {
    check_same_tape(a, b)?;
    let (av, bv) = (a.value(), b.value());
    binary_shapes(&av, &bv, "add")?;
    let value = broadcast_apply(&av, &bv, |x, y| x + y);
    let (ash, bsh) = (av.shape().to_vec(), bv.shape().to_vec());
    let backward = move |g: &Tensor, _: &NodeValues<'_>| {
        vec![
            reduce_to_shape(g.clone(), &ash),
            reduce_to_shape(g.clone(), &bsh),
        ]
    };
    Ok(a.tape()
        .push_node(value, vec![a.idx, b.idx], Some(Box::new(backward)), false))
}

pub fn sub(a: &Var, b: &Var) -> Result<Var> {
    check_same_tape(a, b)?;
    let (av, bv) = (a.value(), b.value());
    binary_shapes(&av, &bv, "sub")?;
    let value = broadcast_apply(&av, &bv, |x, y| x - y);
    let (ash, bsh) = (av.shape().to_vec(), bv.shape().to_vec());
    let backward = move |g: &Tensor, _: &NodeValues<'_>| {
        vec![
            reduce_to_shape(g.clone(), &ash),
            reduce_to_shape(g.mapv(|x| -x), &bsh),
        ]
    };
    Ok(a.tape()
        .push_node(value, vec![a.idx, b.idx], Some(Box::new(backward)), false))
}

pub fn mul(a: &Var, b: &Var) -> Result<Var> {
    check_same_tape(a, b)?;
    let (av, bv) = (a.value(), b.value());
    binary_shapes(&av, &bv, "mul")?;
    let value = broadcast_apply(&av, &bv, |x, y| x * y);
    let (ai, bi) = (a.idx, b.idx);
    let (ash, bsh) = (av.shape().to_vec(), bv.shape().to_vec());
    let backward = move |g: &Tensor, vals: &NodeValues<'_>| {
        let av = vals.value(ai);
        let bv = vals.value(bi);
        let ga = broadcast_apply(g, bv, |gv, y| gv * y);
        let gb = broadcast_apply(g, av, |gv, x| gv * x);
        vec![reduce_to_shape(ga, &ash), reduce_to_shape(gb, &bsh)]
    };
    Ok(a.tape()
        .push_node(value, vec![a.idx, b.idx], Some(Box::new(backward)), false))
}

pub fn div(a: &Var, b: &Var) -> Result<Var> {
    check_same_tape(a, b)?;
    let (av, bv) = (a.value(), b.value());
    binary_shapes(&av, &bv, "div")?;
    let value = broadcast_apply(&av, &bv, |x, y| x / y);
    let (ai, bi) = (a.idx, b.idx);
    let (ash, bsh) = (av.shape().to_vec(), bv.shape().to_vec());
    let backward = move |g: &Tensor, vals: &NodeValues<'_>| {
        let av = vals.value(ai);
        let bv = vals.value(bi);
        let ga = broadcast_apply(g, bv, |gv, y| gv / y);
        // gb = -g * a / b^2
        let ga_times_a = broadcast_apply(g, av, |gv, x| gv * x);
        let gb = broadcast_apply(&ga_times_a, bv, |gax, y| -gax / (y * y));
        vec![reduce_to_shape(ga, &ash), reduce_to_shape(gb, &bsh)]
    };
    Ok(a.tape()
        .push_node(value, vec![a.idx, b.idx], Some(Box::new(backward)), false))
}

pub fn neg(a: &Var) -> Result<Var> {
    scale(a, -1.0)
}

pub fn scale(a: &Var, c: f64) -> Result<Var> {
    let value = a.value().mapv(|x| c * x);
    let backward = move |g: &Tensor, _: &NodeValues<'_>| vec![g.mapv(|x| c * x)];
    Ok(a.tape()
        .push_node(value, vec![a.idx], Some(Box::new(backward)), false))
}

pub fn add_scalar(a: &Var, c: f64) -> Result<Var> {
    let value = a.value().mapv(|x| x + c);
    let backward = move |g: &Tensor, _: &NodeValues<'_>| vec![g.clone()];
    Ok(a.tape()
        .push_node(value, vec![a.idx], Some(Box::new(backward)), false))
}

/// Unary elementwise helper: `f` is the forward map, `df` the derivative at
/// the input.
fn unary(a: &Var, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64 + 'static) -> Var {
    let input = a.value();
    let value = input.mapv(&f);
    let ai = a.idx;
    let backward = move |g: &Tensor, vals: &NodeValues<'_>| {
        let input = vals.value(ai);
        let mut ga = g.clone();
        ga.zip_mut_with(input, |gv, &x| *gv *= df(x));
        vec![ga]
    };
    a.tape()
        .push_node(value, vec![a.idx], Some(Box::new(backward)), false)
}

pub fn relu(a: &Var) -> Result<Var> {
    Ok(unary(a, |x| x.max(0.0), |x| if x > 0.0 { 1.0 } else { 0.0 }))
}

pub fn sigmoid(a: &Var) -> Result<Var> {
    Ok(unary(
        a,
        |x| 1.0 / (1.0 + (-x).exp()),
        |x| {
            let s = 1.0 / (1.0 + (-x).exp());
            s * (1.0 - s)
        },
    ))
}

pub fn exp(a: &Var) -> Result<Var> {
    Ok(unary(a, f64::exp, |x| x.exp()))
}

pub fn ln(a: &Var) -> Result<Var> {
    Ok(unary(a, f64::ln, |x| 1.0 / x))
}

pub fn sqrt(a: &Var) -> Result<Var> {
    Ok(unary(a, f64::sqrt, |x| 0.5 / x.sqrt()))
}

pub fn sin(a: &Var) -> Result<Var> {
    Ok(unary(a, f64::sin, |x| x.cos()))
}

pub fn cos(a: &Var) -> Result<Var> {
    Ok(unary(a, f64::cos, |x| -x.sin()))
}

pub fn asin(a: &Var) -> Result<Var> {
    Ok(unary(a, f64::asin, |x| 1.0 / (1.0 - x * x).sqrt()))
}

pub fn recip(a: &Var) -> Result<Var> {
    Ok(unary(a, |x| 1.0 / x, |x| -1.0 / (x * x)))
}

/// Clamp from below; gradient passes only where the input is above `c`.
pub fn clamp_min(a: &Var, c: f64) -> Result<Var> {
    Ok(unary(
        a,
        move |x| x.max(c),
        move |x| if x > c { 1.0 } else { 0.0 },
    ))
}

pub fn clamp(a: &Var, lo: f64, hi: f64) -> Result<Var> {
    Ok(unary(
        a,
        move |x| x.clamp(lo, hi),
        move |x| if x > lo && x < hi { 1.0 } else { 0.0 },
    ))
}

/// Wraps into `(-pi/2, pi/2]`; piecewise-constant shift, so the gradient is
/// the identity almost everywhere.
pub fn mod_pi(a: &Var) -> Result<Var> {
    use std::f64::consts::PI;
    Ok(unary(a, |x| x - PI * (x / PI - 0.5).ceil(), |_| 1.0))
}

/// Elementwise `atan2(y, x)` on same-shape tensors.
pub fn atan2(y: &Var, x: &Var) -> Result<Var> {
    check_same_tape(y, x)?;
    let (yv, xv) = (y.value(), x.value());
    if yv.shape() != xv.shape() {
        return Err(AutodiffError::Shape(format!(
            "atan2: {:?} vs {:?}",
            yv.shape(),
            xv.shape()
        )));
    }
    let mut value = yv.clone();
    value.zip_mut_with(&xv, |a, &b| *a = a.atan2(b));
    let (yi, xi) = (y.idx, x.idx);
    let backward = move |g: &Tensor, vals: &NodeValues<'_>| {
        let yv = vals.value(yi);
        let xv = vals.value(xi);
        let mut gy = g.clone();
        let mut gx = g.clone();
        for ((gyv, gxv), (yy, xx)) in gy
            .iter_mut()
            .zip(gx.iter_mut())
            .zip(yv.iter().zip(xv.iter()))
        {
            let denom = xx * xx + yy * yy;
            let gvin = *gyv;
            *gyv = gvin * xx / denom;
            *gxv = -gvin * yy / denom;
        }
        vec![gy, gx]
    };
    Ok(y.tape()
        .push_node(value, vec![y.idx, x.idx], Some(Box::new(backward)), false))
}

/// 2-D matrix product.
pub fn matmul(a: &Var, b: &Var) -> Result<Var> {
    check_same_tape(a, b)?;
    let av = a.value();
    let bv = b.value();
    let a2 = av
        .view()
        .into_dimensionality::<ndarray::Ix2>()
        .map_err(|_| AutodiffError::Shape(format!("matmul lhs not 2-D: {:?}", av.shape())))?;
    let b2 = bv
        .view()
        .into_dimensionality::<ndarray::Ix2>()
        .map_err(|_| AutodiffError::Shape(format!("matmul rhs not 2-D: {:?}", bv.shape())))?;
    if a2.ncols() != b2.nrows() {
        return Err(AutodiffError::Shape(format!(
            "matmul: {:?} x {:?}",
            av.shape(),
            bv.shape()
        )));
    }
    a.tape()
        .add_macs((a2.nrows() * a2.ncols() * b2.ncols()) as u64);
    let value = a2.dot(&b2).into_dyn();
    let (ai, bi) = (a.idx, b.idx);
    let backward = move |g: &Tensor, vals: &NodeValues<'_>| {
        let g2 = g.view().into_dimensionality::<ndarray::Ix2>().unwrap();
        let av = vals.value(ai);
        let bv = vals.value(bi);
        let a2 = av.view().into_dimensionality::<ndarray::Ix2>().unwrap();
        let b2 = bv.view().into_dimensionality::<ndarray::Ix2>().unwrap();
        let ga = g2.dot(&b2.t()).into_dyn();
        let gb = a2.t().dot(&g2).into_dyn();
        vec![ga, gb]
    };
    Ok(a.tape()
        .push_node(value, vec![a.idx, b.idx], Some(Box::new(backward)), false))
}

pub fn transpose2d(a: &Var) -> Result<Var> {
    let av = a.value();
    if av.ndim() != 2 {
        return Err(AutodiffError::Shape(format!(
            "transpose2d needs a matrix, got {:?}",
            av.shape()
        )));
    }
    let value = av.t().to_owned().into_dyn();
    let backward =
        move |g: &Tensor, _: &NodeValues<'_>| vec![g.view().reversed_axes().to_owned()];
    Ok(a.tape()
        .push_node(value, vec![a.idx], Some(Box::new(backward)), false))
}

pub fn reshape(a: &Var, shape: &[usize]) -> Result<Var> {
    let av = a.value();
    if av.len() != shape.iter().product::<usize>() {
        return Err(AutodiffError::Shape(format!(
            "reshape: cannot view {:?} as {shape:?}",
            av.shape()
        )));
    }
    let in_shape = av.shape().to_vec();
    let value = av
        .into_shape_with_order(IxDyn(shape))
        .map_err(|e| AutodiffError::Shape(e.to_string()))?;
    let backward = move |g: &Tensor, _: &NodeValues<'_>| {
        vec![g
            .clone()
            .into_shape_with_order(IxDyn(&in_shape))
            .expect("reshape backward")]
    };
    Ok(a.tape()
        .push_node(value, vec![a.idx], Some(Box::new(backward)), false))
}

/// Contiguous slice along one axis.
pub fn narrow(a: &Var, axis: usize, start: usize, len: usize) -> Result<Var> {
    let av = a.value();
    if axis >= av.ndim() || start + len > av.shape()[axis] {
        return Err(AutodiffError::Shape(format!(
            "narrow(axis={axis}, start={start}, len={len}) on {:?}",
            av.shape()
        )));
    }
    let value = av
        .slice_axis(Axis(axis), Slice::from(start..start + len))
        .to_owned();
    let in_shape = av.shape().to_vec();
    let backward = move |g: &Tensor, _: &NodeValues<'_>| {
        let mut full = Tensor::zeros(IxDyn(&in_shape));
        full.slice_axis_mut(Axis(axis), Slice::from(start..start + len))
            .assign(g);
        vec![full]
    };
    Ok(a.tape()
        .push_node(value, vec![a.idx], Some(Box::new(backward)), false))
}

/// Index selection on a 1-D tensor; duplicate indices accumulate in the
/// backward scatter.
pub fn gather1d(a: &Var, indices: &[usize]) -> Result<Var> {
    let av = a.value();
    if av.ndim() != 1 {
        return Err(AutodiffError::Shape(format!(
            "gather1d needs a vector, got {:?}",
            av.shape()
        )));
    }
    let n = av.len();
    if indices.iter().any(|&i| i >= n) {
        return Err(AutodiffError::Shape(format!(
            "gather1d index out of bounds for length {n}"
        )));
    }
    let value = Tensor::from_shape_vec(
        IxDyn(&[indices.len()]),
        indices.iter().map(|&i| av[[i]]).collect(),
    )
    .unwrap();
    let idx: Vec<usize> = indices.to_vec();
    let backward = move |g: &Tensor, _: &NodeValues<'_>| {
        let mut full = Tensor::zeros(IxDyn(&[n]));
        for (k, &i) in idx.iter().enumerate() {
            full[[i]] += g[[k]];
        }
        vec![full]
    };
    Ok(a.tape()
        .push_node(value, vec![a.idx], Some(Box::new(backward)), false))
}

/// Concatenation of scalars and vectors into one vector.
pub fn concat1d(parts: &[Var]) -> Result<Var> {
    if parts.is_empty() {
        return Err(AutodiffError::Shape("concat1d of nothing".into()));
    }
    let tape = parts[0].tape().clone();
    let mut data = Vec::new();
    let mut lens = Vec::with_capacity(parts.len());
    let mut shapes = Vec::with_capacity(parts.len());
    for p in parts {
        check_same_tape(&parts[0], p)?;
        let v = p.value();
        if v.ndim() > 1 {
            return Err(AutodiffError::Shape(format!(
                "concat1d accepts scalars and vectors, got {:?}",
                v.shape()
            )));
        }
        lens.push(v.len());
        shapes.push(v.shape().to_vec());
        data.extend(v.iter().copied());
    }
    let value = Tensor::from_shape_vec(IxDyn(&[data.len()]), data).unwrap();
    let backward = move |g: &Tensor, _: &NodeValues<'_>| {
        let mut out = Vec::with_capacity(lens.len());
        let mut offset = 0usize;
        for (len, shape) in lens.iter().zip(&shapes) {
            let chunk: Vec<f64> = (offset..offset + len).map(|i| g[[i]]).collect();
            offset += len;
            out.push(Tensor::from_shape_vec(IxDyn(shape), chunk).unwrap());
        }
        out
    };
    Ok(tape.push_node(
        value,
        parts.iter().map(|p| p.idx).collect(),
        Some(Box::new(backward)),
        false,
    ))
}

pub fn sum(a: &Var) -> Result<Var> {
    let av = a.value();
    let value = Tensor::from_elem(IxDyn(&[]), av.sum());
    let in_shape = av.shape().to_vec();
    let backward = move |g: &Tensor, _: &NodeValues<'_>| {
        let gv = *g.iter().next().unwrap();
        vec![Tensor::from_elem(IxDyn(&in_shape), gv)]
    };
    Ok(a.tape()
        .push_node(value, vec![a.idx], Some(Box::new(backward)), false))
}

pub fn mean(a: &Var) -> Result<Var> {
    let n = a.len() as f64;
    let s = sum(a)?;
    scale(&s, 1.0 / n)
}

/// Sum along one axis (the axis is removed).
pub fn sum_axis(a: &Var, axis: usize) -> Result<Var> {
    let av = a.value();
    if axis >= av.ndim() {
        return Err(AutodiffError::Shape(format!(
            "sum_axis {axis} on {:?}",
            av.shape()
        )));
    }
    let value = av.sum_axis(Axis(axis));
    let in_shape = av.shape().to_vec();
    let backward = move |g: &Tensor, _: &NodeValues<'_>| {
        let mut full = Tensor::zeros(IxDyn(&in_shape));
        for mut lane in full.axis_iter_mut(Axis(axis)) {
            lane.zip_mut_with(g, |slot, &gv| *slot = gv);
        }
        vec![full]
    };
    Ok(a.tape()
        .push_node(value, vec![a.idx], Some(Box::new(backward)), false))
}

/// Euclidean norm reduced to a scalar; gradient is `a / ||a||`, zero at the
/// origin.
pub fn l2_norm(a: &Var) -> Result<Var> {
    let av = a.value();
    let norm = av.iter().map(|x| x * x).sum::<f64>().sqrt();
    let value = Tensor::from_elem(IxDyn(&[]), norm);
    let ai = a.idx;
    let backward = move |g: &Tensor, vals: &NodeValues<'_>| {
        let gv = *g.iter().next().unwrap();
        let av = vals.value(ai);
        let norm = av.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-300 {
            vec![Tensor::zeros(av.raw_dim())]
        } else {
            vec![av.mapv(|x| gv * x / norm)]
        }
    };
    Ok(a.tape()
        .push_node(value, vec![a.idx], Some(Box::new(backward)), false))
}

/// Numerically stable softmax over a vector.
pub fn softmax1d(a: &Var) -> Result<Var> {
    let av = a.value();
    if av.ndim() != 1 {
        return Err(AutodiffError::Shape(format!(
            "softmax1d needs a vector, got {:?}",
            av.shape()
        )));
    }
    let max = av.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = av.mapv(|x| (x - max).exp());
    let total: f64 = exps.sum();
    let value = exps.mapv(|e| e / total);
    let out = value.clone();
    let backward = move |g: &Tensor, _: &NodeValues<'_>| {
        let inner: f64 = g.iter().zip(out.iter()).map(|(gv, s)| gv * s).sum();
        let mut ga = g.clone();
        ga.zip_mut_with(&out, |gv, &s| *gv = s * (*gv - inner));
        vec![ga]
    };
    Ok(a.tape()
        .push_node(value, vec![a.idx], Some(Box::new(backward)), false))
}

/// Inner product of two same-shape tensors.
pub fn dot(a: &Var, b: &Var) -> Result<Var> {
    sum(&mul(a, b)?)
}

/// Anti-rectifier activation along `axis`: center by the mean, L2-normalize,
/// and concatenate the positive and negative rectified halves (doubling that
/// axis). Zero-norm lanes skip the normalization.
pub fn anti_rectifier(a: &Var, axis: usize) -> Result<Var> {
    let av = a.value();
    if axis >= av.ndim() {
        return Err(AutodiffError::Shape(format!(
            "anti_rectifier axis {axis} on {:?}",
            av.shape()
        )));
    }
    let c = av.shape()[axis];
    if c < 2 {
        return Err(AutodiffError::Shape(format!(
            "anti_rectifier needs at least 2 features along axis {axis}"
        )));
    }
    let mut out_shape = av.shape().to_vec();
    out_shape[axis] *= 2;
    let mut value = Tensor::zeros(IxDyn(&out_shape));
    {
        let mut pos = value.slice_axis_mut(Axis(axis), Slice::from(0..c));
        pos.assign(&av);
        normalize_lanes(&mut pos, axis);
        pos.mapv_inplace(|x| x.max(0.0));
    }
    {
        let mut neg = value.slice_axis_mut(Axis(axis), Slice::from(c..2 * c));
        neg.assign(&av);
        normalize_lanes(&mut neg, axis);
        neg.mapv_inplace(|x| (-x).max(0.0));
    }
    let ai = a.idx;
    let backward = move |g: &Tensor, vals: &NodeValues<'_>| {
        let av = vals.value(ai);
        let mut centered = av.clone();
        normalize_lanes_centered_only(&mut centered, axis);
        let mut gx = Tensor::zeros(av.raw_dim());
        let g_pos = g.slice_axis(Axis(axis), Slice::from(0..c));
        let g_neg = g.slice_axis(Axis(axis), Slice::from(c..2 * c));
        // per-lane chain rule through relu, normalize, center
        let lanes = centered.lanes(Axis(axis));
        let mut gx_lanes = gx.lanes_mut(Axis(axis));
        let gp_lanes = g_pos.lanes(Axis(axis));
        let gn_lanes = g_neg.lanes(Axis(axis));
        for (((cl, mut gl), gp), gn) in lanes
            .into_iter()
            .zip(gx_lanes.iter_mut())
            .zip(gp_lanes)
            .zip(gn_lanes)
        {
            let n: f64 = cl.iter().map(|x| x * x).sum::<f64>().sqrt();
            let scale = if n > 1e-150 { n } else { 1.0 };
            // u = c / scale; gu from the two relu halves
            let u: Vec<f64> = cl.iter().map(|&x| x / scale).collect();
            let gu: Vec<f64> = u
                .iter()
                .zip(gp.iter().zip(gn.iter()))
                .map(|(&uv, (&gpv, &gnv))| {
                    let mut acc = 0.0;
                    if uv > 0.0 {
                        acc += gpv;
                    }
                    if -uv > 0.0 {
                        acc -= gnv;
                    }
                    acc
                })
                .collect();
            // through normalization: gc = (gu - u (u . gu)) / scale
            // (identity scale when the norm underflowed)
            let udotgu: f64 = u.iter().zip(&gu).map(|(a, b)| a * b).sum();
            let gc: Vec<f64> = if n > 1e-150 {
                u.iter()
                    .zip(&gu)
                    .map(|(&uv, &guv)| (guv - uv * udotgu) / scale)
                    .collect()
            } else {
                gu
            };
            // through centering: gx = gc - mean(gc)
            let mean_gc: f64 = gc.iter().sum::<f64>() / gc.len() as f64;
            for (slot, &gcv) in gl.iter_mut().zip(&gc) {
                *slot = gcv - mean_gc;
            }
        }
        vec![gx]
    };
    Ok(a.tape()
        .push_node(value, vec![a.idx], Some(Box::new(backward)), false))
}

/// Center each lane along `axis` and divide by its L2 norm (skip when the
/// norm underflows).
fn normalize_lanes(view: &mut ndarray::ArrayViewMutD<'_, f64>, axis: usize) {
    for mut lane in view.lanes_mut(Axis(axis)) {
        let mean: f64 = lane.iter().sum::<f64>() / lane.len() as f64;
        lane.mapv_inplace(|x| x - mean);
        let n: f64 = lane.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-150 {
            lane.mapv_inplace(|x| x / n);
        }
    }
}

fn normalize_lanes_centered_only(view: &mut Tensor, axis: usize) {
    for mut lane in view.lanes_mut(Axis(axis)) {
        let mean: f64 = lane.iter().sum::<f64>() / lane.len() as f64;
        lane.mapv_inplace(|x| x - mean);
    }
}

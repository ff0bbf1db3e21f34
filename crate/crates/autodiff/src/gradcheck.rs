//! Central finite-difference verification of reverse-mode gradients.

use crate::error::AutodiffError;
use crate::optim::{ParamVars, ParameterSet};
use crate::tape::{Tape, Tensor, Var};
use crate::Result;

/// Max relative error between reverse-mode and central finite differences,
/// coordinate by coordinate, with denominator `max(|fd|, |ad|, 1e-8)`.
pub fn grad_check<F>(f: F, x0: &Tensor, eps: f64) -> Result<f64>
where
    F: Fn(&Tape, &Var) -> Result<Var>,
{
    if eps <= 0.0 || !eps.is_finite() {
        return Err(AutodiffError::Domain(format!(
            "finite-difference step must be positive, got {eps}"
        )));
    }
    let tape = Tape::new();
    let x = tape.var(x0.clone());
    let y = f(&tape, &x)?;
    if !y.scalar_value().is_finite() {
        return Err(AutodiffError::Numeric("non-finite function value".into()));
    }
    let grads = y.backward()?;
    let analytic = grads.wrt(&x);

    let eval = |t: &Tensor| -> Result<f64> {
        let tape = Tape::new();
        let x = tape.var(t.clone());
        let y = f(&tape, &x)?;
        Ok(y.scalar_value())
    };

    let mut worst = 0.0f64;
    let mut probe = x0.clone();
    for idx in 0..x0.len() {
        let flat = probe.as_slice_mut().expect("contiguous tensor");
        let base = flat[idx];
        flat[idx] = base + eps;
        let plus = eval(&probe)?;
        let flat = probe.as_slice_mut().unwrap();
        flat[idx] = base - eps;
        let minus = eval(&probe)?;
        let flat = probe.as_slice_mut().unwrap();
        flat[idx] = base;
        let fd = (plus - minus) / (2.0 * eps);
        let ad = analytic.as_slice().unwrap()[idx];
        let rel = (fd - ad).abs() / fd.abs().max(ad.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Finite-difference check across every coordinate of every parameter.
pub fn grad_check_params<F>(f: F, params: &ParameterSet, eps: f64) -> Result<f64>
where
    F: Fn(&Tape, &ParamVars) -> Result<Var>,
{
    if eps <= 0.0 || !eps.is_finite() {
        return Err(AutodiffError::Domain(format!(
            "finite-difference step must be positive, got {eps}"
        )));
    }
    let tape = Tape::new();
    let vars = params.to_vars(&tape);
    let y = f(&tape, &vars)?;
    if !y.scalar_value().is_finite() {
        return Err(AutodiffError::Numeric("non-finite function value".into()));
    }
    let grads = y.backward()?;

    let eval = |p: &ParameterSet| -> Result<f64> {
        let tape = Tape::new();
        let vars = p.to_vars(&tape);
        Ok(f(&tape, &vars)?.scalar_value())
    };

    let mut worst = 0.0f64;
    let mut probe = params.clone();
    for (name, var) in vars.iter() {
        let analytic = grads.wrt(var);
        let len = analytic.len();
        for idx in 0..len {
            {
                let t = probe.get_mut(name).unwrap();
                t.as_slice_mut().unwrap()[idx] += eps;
            }
            let plus = eval(&probe)?;
            {
                let t = probe.get_mut(name).unwrap();
                t.as_slice_mut().unwrap()[idx] -= 2.0 * eps;
            }
            let minus = eval(&probe)?;
            {
                let t = probe.get_mut(name).unwrap();
                t.as_slice_mut().unwrap()[idx] += eps;
            }
            let fd = (plus - minus) / (2.0 * eps);
            let ad = analytic.as_slice().unwrap()[idx];
            let rel = (fd - ad).abs() / fd.abs().max(ad.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

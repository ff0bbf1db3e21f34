//! Named parameter sets and first-order updates.
//!
//! Plain SGD is the reference update; momentum and Adam are configuration
//! extensions (off by default) for desk-scale runs where vanilla steps are
//! too slow to converge.

use ndarray::IxDyn;
use serde::{Deserialize, Serialize};

use crate::error::AutodiffError;
use crate::tape::{Gradients, Tape, Tensor, Var};
use crate::Result;

/// Ordered, uniquely named tensors (convolution kernels, biases, the skip
/// logit).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    entries: Vec<(String, Tensor)>,
}

impl Default for ParameterSet {
    fn default() -> Self {
        Self::new()
    }
}

impl ParameterSet {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    pub fn insert(&mut self, name: &str, tensor: Tensor) -> Result<()> {
        if self.entries.iter().any(|(n, _)| n == name) {
            return Err(AutodiffError::Tape(format!("duplicate parameter {name}")));
        }
        if tensor.iter().any(|v| !v.is_finite()) {
            return Err(AutodiffError::Numeric(format!(
                "parameter {name} holds non-finite entries"
            )));
        }
        self.entries.push((name.to_string(), tensor));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries
            .iter_mut()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    /// Registers every parameter as a leaf variable on `tape`.
    pub fn to_vars(&self, tape: &Tape) -> ParamVars {
        ParamVars {
            entries: self
                .entries
                .iter()
                .map(|(n, t)| (n.clone(), tape.var(t.clone())))
                .collect(),
        }
    }
}

/// Tape handles for a parameter set, in insertion order.
pub struct ParamVars {
    entries: Vec<(String, Var)>,
}

impl ParamVars {
    pub fn var(&self, name: &str) -> Result<&Var> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
            .ok_or_else(|| AutodiffError::Tape(format!("unknown parameter {name}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = &(String, Var)> {
        self.entries.iter()
    }

    /// Extracts gradients in parameter order (zeros where none flowed).
    pub fn collect_grads(&self, grads: &Gradients) -> GradSet {
        GradSet {
            entries: self
                .entries
                .iter()
                .map(|(n, v)| (n.clone(), grads.wrt(v)))
                .collect(),
        }
    }
}

/// Gradients keyed like a [`ParameterSet`].
#[derive(Debug, Clone)]
pub struct GradSet {
    entries: Vec<(String, Tensor)>,
}

impl GradSet {
    pub fn zeros_like(params: &ParameterSet) -> Self {
        Self {
            entries: params
                .entries
                .iter()
                .map(|(n, t)| (n.clone(), Tensor::zeros(IxDyn(t.shape()))))
                .collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// Elementwise accumulate (fixed order keeps reductions deterministic).
    pub fn accumulate(&mut self, other: &GradSet) {
        for ((_, acc), (_, add)) in self.entries.iter_mut().zip(&other.entries) {
            *acc += add;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for (_, t) in &mut self.entries {
            t.mapv_inplace(|v| v * c);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.entries
            .iter()
            .all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Applied,
    /// Non-finite gradients: the step was skipped and counted.
    SkippedNonFinite,
}

/// One plain gradient-descent step, in place. Non-finite gradients skip the
/// update.
pub fn sgd_step(params: &mut ParameterSet, grads: &GradSet, lr: f64) -> StepOutcome {
    debug_assert!(lr > 0.0);
    if !grads.is_finite() {
        return StepOutcome::SkippedNonFinite;
    }
    for ((_, p), (_, g)) in params.entries.iter_mut().zip(&grads.entries) {
        p.zip_mut_with(g, |pv, &gv| *pv -= lr * gv);
    }
    StepOutcome::Applied
}

/// First-order optimizer selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Optimizer {
    Sgd,
    Momentum { beta: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Sgd
    }
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment buffers plus the skipped-step counter.
pub struct OptimizerState {
    step: u64,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
    pub skipped_nonfinite: u64,
}

impl OptimizerState {
    pub fn new(params: &ParameterSet) -> Self {
        let zeros: Vec<Tensor> = params
            .entries
            .iter()
            .map(|(_, t)| Tensor::zeros(IxDyn(t.shape())))
            .collect();
        Self {
            step: 0,
            first: zeros.clone(),
            second: zeros,
            skipped_nonfinite: 0,
        }
    }

    pub fn apply(
        &mut self,
        optimizer: Optimizer,
        params: &mut ParameterSet,
        grads: &GradSet,
        lr: f64,
    ) -> StepOutcome {
        if !grads.is_finite() {
            self.skipped_nonfinite += 1;
            return StepOutcome::SkippedNonFinite;
        }
        self.step += 1;
        match optimizer {
            Optimizer::Sgd => sgd_step(params, grads, lr),
            Optimizer::Momentum { beta } => {
                for (((_, p), (_, g)), m) in params
                    .entries
                    .iter_mut()
                    .zip(&grads.entries)
                    .zip(&mut self.first)
                {
                    m.zip_mut_with(g, |mv, &gv| *mv = beta * *mv + gv);
                    p.zip_mut_with(m, |pv, &mv| *pv -= lr * mv);
                }
                StepOutcome::Applied
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                let t = self.step as f64;
                let bc1 = 1.0 - beta1.powf(t);
                let bc2 = 1.0 - beta2.powf(t);
                for ((((_, p), (_, g)), m), v) in params
                    .entries
                    .iter_mut()
                    .zip(&grads.entries)
                    .zip(&mut self.first)
                    .zip(&mut self.second)
                {
                    m.zip_mut_with(g, |mv, &gv| *mv = beta1 * *mv + (1.0 - beta1) * gv);
                    v.zip_mut_with(g, |vv, &gv| *vv = beta2 * *vv + (1.0 - beta2) * gv * gv);
                    ndarray::Zip::from(p).and(&*m).and(&*v).for_each(
                        |pv, &mv, &vv| {
                            let mhat = mv / bc1;
                            let vhat = vv / bc2;
                            *pv -= lr * mhat / (vhat.sqrt() + eps);
                        },
                    );
                }
                StepOutcome::Applied
            }
        }
    }
}

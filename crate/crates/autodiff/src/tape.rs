use ndarray::{ArrayD, IxDyn};
use std::cell::RefCell;
use std::rc::Rc;

use crate::error::AutodiffError;
use crate::Result;

/// Dynamically shaped `f64` tensor; scalars use the zero-dimensional shape.
pub type Tensor = ArrayD<f64>;

pub(crate) type BackwardFn = Box<dyn Fn(&Tensor, &NodeValues<'_>) -> Vec<Tensor>>;

pub(crate) struct Node {
    pub(crate) value: Tensor,
    pub(crate) parents: Vec<usize>,
    pub(crate) backward: Option<BackwardFn>,
    pub(crate) requires_grad: bool,
}

pub(crate) struct TapeInner {
    pub(crate) nodes: Vec<Node>,
    pub(crate) macs: u64,
}

/// Read-only view of node values handed to backward rules.
pub struct NodeValues<'a> {
    nodes: &'a [Node],
}

impl NodeValues<'_> {
    pub(crate) fn value(&self, idx: usize) -> &Tensor {
        &self.nodes[idx].value
    }
}

/// Records operations for reverse-mode differentiation.
///
/// Graphs are per-sample and single-threaded; parents always precede
/// children, so the node order is already topological.
#[derive(Clone)]
pub struct Tape {
    inner: Rc<RefCell<TapeInner>>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            inner: Rc::new(RefCell::new(TapeInner {
                nodes: Vec::new(),
                macs: 0,
            })),
        }
    }

    /// Leaf that participates in differentiation.
    pub fn var(&self, value: Tensor) -> Var {
        self.push_node(value, Vec::new(), None, true)
    }

    /// Leaf treated as a constant.
    pub fn constant(&self, value: Tensor) -> Var {
        self.push_node(value, Vec::new(), None, false)
    }

    pub fn scalar_constant(&self, v: f64) -> Var {
        self.constant(Tensor::from_elem(IxDyn(&[]), v))
    }

    /// Multiply-accumulate operations recorded by matmul/conv nodes.
    pub fn mac_count(&self) -> u64 {
        self.inner.borrow().macs
    }

    pub fn num_nodes(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    pub(crate) fn add_macs(&self, n: u64) {
        self.inner.borrow_mut().macs += n;
    }

    pub(crate) fn push_node(
        &self,
        value: Tensor,
        parents: Vec<usize>,
        backward: Option<BackwardFn>,
        leaf_var: bool,
    ) -> Var {
        let mut inner = self.inner.borrow_mut();
        let requires_grad = leaf_var
            || (backward.is_some()
                && parents.iter().any(|&p| inner.nodes[p].requires_grad));
        let backward = if requires_grad { backward } else { None };
        let idx = inner.nodes.len();
        inner.nodes.push(Node {
            value,
            parents,
            backward,
            requires_grad,
        });
        Var {
            tape: self.clone(),
            idx,
        }
    }

    pub(crate) fn same_tape(&self, other: &Tape) -> bool {
        Rc::ptr_eq(&self.inner, &other.inner)
    }
}

/// Handle to a tape node.
#[derive(Clone)]
pub struct Var {
    pub(crate) tape: Tape,
    pub(crate) idx: usize,
}

impl Var {
    pub fn tape(&self) -> &Tape {
        &self.tape
    }

    pub fn value(&self) -> Tensor {
        self.tape.inner.borrow().nodes[self.idx].value.clone()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.inner.borrow().nodes[self.idx]
            .value
            .shape()
            .to_vec()
    }

    pub fn len(&self) -> usize {
        self.tape.inner.borrow().nodes[self.idx].value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Value of a single-element node.
    pub fn scalar_value(&self) -> f64 {
        let inner = self.tape.inner.borrow();
        let v = &inner.nodes[self.idx].value;
        debug_assert_eq!(v.len(), 1, "scalar_value on a non-scalar node");
        *v.iter().next().expect("empty tensor")
    }

    /// Reverse pass from this scalar node.
    ///
    /// Every node is visited exactly once in reverse topological order;
    /// fan-out gradients accumulate additively.
    pub fn backward(&self) -> Result<Gradients> {
        let inner = self.tape.inner.borrow();
        let out = &inner.nodes[self.idx];
        if out.value.len() != 1 {
            return Err(AutodiffError::Tape(format!(
                "backward needs a scalar output, got shape {:?}",
                out.value.shape()
            )));
        }
        if out.value.iter().any(|v| !v.is_finite()) {
            return Err(AutodiffError::Numeric(
                "backward from a non-finite output".into(),
            ));
        }
        let mut grads: Vec<Option<Tensor>> = (0..inner.nodes.len()).map(|_| None).collect();
        grads[self.idx] = Some(Tensor::from_elem(out.value.raw_dim(), 1.0));
        let values = NodeValues {
            nodes: &inner.nodes,
        };
        for idx in (0..=self.idx).rev() {
            if !inner.nodes[idx].requires_grad {
                grads[idx] = None;
                continue;
            }
            let Some(grad) = grads[idx].take() else {
                continue;
            };
            if let Some(backward) = &inner.nodes[idx].backward {
                let contributions = backward(&grad, &values);
                debug_assert_eq!(contributions.len(), inner.nodes[idx].parents.len());
                for (parent, contribution) in
                    inner.nodes[idx].parents.iter().zip(contributions)
                {
                    if !inner.nodes[*parent].requires_grad {
                        continue;
                    }
                    match &mut grads[*parent] {
                        Some(acc) => *acc += &contribution,
                        slot @ None => *slot = Some(contribution),
                    }
                }
                grads[idx] = Some(grad); // keep for leaf queries
            } else {
                grads[idx] = Some(grad);
            }
        }
        Ok(Gradients { grads })
    }
}

/// Gradient store returned by [`Var::backward`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient with respect to `v`, zero-shaped if it never received one.
    pub fn wrt(&self, v: &Var) -> Tensor {
        match &self.grads[v.idx] {
            Some(g) => g.clone(),
            None => {
                let shape = v.shape();
                Tensor::zeros(IxDyn(&shape))
            }
        }
    }

    pub fn has_grad(&self, v: &Var) -> bool {
        self.grads[v.idx].is_some()
    }
}

pub(crate) fn check_same_tape(a: &Var, b: &Var) -> Result<()> {
    if !a.tape.same_tape(&b.tape) {
        return Err(AutodiffError::Tape(
            "operands come from different tapes".into(),
        ));
    }
    Ok(())
}

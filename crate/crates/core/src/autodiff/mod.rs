//! Reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! A [`Tape`] records every primitive applied to [`Var`] handles in
//! execution order. [`Tape::backward`] walks the recording once in reverse
//! and returns [`Gradients`] for every node, leaves included.
//!
//! Binary elementwise primitives accept operands of equal shape, or one
//! operand with a single element which is broadcast against the other.

mod backward;
mod ops;

use std::cell::{Ref, RefCell};
use std::fmt;

pub use backward::{grad_sign, Gradients};

/// Lower and upper bound applied to the argument of `acos` before its
/// derivative is evaluated.
pub const ACOS_GRAD_CLAMP: f64 = 1.0 - 1e-7;

/// Smoothing constant of the differentiable absolute value
/// `sqrt(v^2 + ABS_SMOOTHING) - sqrt(ABS_SMOOTHING)`.
pub const ABS_SMOOTHING: f64 = 1e-12;

/// Divisors with magnitude below this are rejected.
pub const DIV_SINGULARITY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: divisor magnitude {value:e} at index {index} is below the singularity threshold")]
    Singular {
        op: &'static str,
        index: usize,
        value: f64,
    },
    #[error("{op} produced non-finite value {value} at index {index}")]
    NonFinite {
        op: &'static str,
        index: usize,
        value: f64,
    },
    #[error("backward requires a scalar loss, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("{op}: index {index} out of range for tensor of {len} elements")]
    Index {
        op: &'static str,
        index: usize,
        len: usize,
    },
    #[error("variable belongs to a different tape")]
    ForeignVar,
}

pub type Result<T> = std::result::Result<T, AutodiffError>;

#[derive(Debug, Clone)]
pub(crate) enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    MatMul {
        a: usize,
        b: usize,
        m: usize,
        k: usize,
        n: usize,
    },
    Neg(usize),
    Scale(usize, f64),
    Shift(usize),
    Sin(usize),
    Cos(usize),
    Acos(usize),
    Sqrt(usize),
    Abs(usize),
    Exp(usize),
    Ln(usize),
    Tanh(usize),
    Softplus(usize),
    Sum(usize),
    Mean(usize),
    Clamp {
        a: usize,
        lo: f64,
        hi: f64,
    },
    Gather {
        a: usize,
        index: Vec<Option<usize>>,
    },
    Reshape(usize),
    Concat(Vec<usize>),
    BilinearSample {
        image: usize,
        coords: usize,
        height: usize,
        width: usize,
        channels: usize,
    },
}

#[derive(Debug)]
pub(crate) struct Node {
    pub(crate) shape: Vec<usize>,
    pub(crate) value: Vec<f64>,
    pub(crate) op: Op,
}

/// Append-only record of a single forward computation.
///
/// A tape is single-owner: it is `!Sync`, and independent computations
/// should each build their own.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tape")
            .field("nodes", &self.nodes.borrow().len())
            .finish()
    }
}

/// Handle to one tensor recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Var")
            .field("id", &self.id)
            .field("shape", &self.shape())
            .finish()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records an input tensor. Any leaf can be differentiated against.
    pub fn leaf(&self, values: Vec<f64>, shape: &[usize]) -> Result<Var<'_>> {
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(AutodiffError::Shape {
                op: "leaf",
                lhs: shape.to_vec(),
                rhs: vec![values.len()],
            });
        }
        self.push(values, shape.to_vec(), Op::Leaf, "leaf")
    }

    pub fn scalar(&self, value: f64) -> Result<Var<'_>> {
        self.leaf(vec![value], &[1])
    }

    /// Flat concatenation of several tensors into a rank-1 tensor.
    pub fn concat<'t>(&'t self, parts: &[Var<'t>]) -> Result<Var<'t>> {
        let mut value = Vec::new();
        let mut ids = Vec::with_capacity(parts.len());
        for p in parts {
            self.check_owner(*p)?;
            value.extend_from_slice(&self.node(p.id).value);
            ids.push(p.id);
        }
        let len = value.len();
        self.push(value, vec![len], Op::Concat(ids), "concat")
    }

    pub(crate) fn node(&self, id: usize) -> Ref<'_, Node> {
        Ref::map(self.nodes.borrow(), |n| &n[id])
    }

    pub(crate) fn check_owner(&self, v: Var<'_>) -> Result<()> {
        if std::ptr::eq(self, v.tape) {
            Ok(())
        } else {
            Err(AutodiffError::ForeignVar)
        }
    }

    pub(crate) fn push(
        &self,
        value: Vec<f64>,
        shape: Vec<usize>,
        op: Op,
        name: &'static str,
    ) -> Result<Var<'_>> {
        if let Some((index, &v)) = value.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(AutodiffError::NonFinite {
                op: name,
                index,
                value: v,
            });
        }
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { shape, value, op });
        Ok(Var {
            tape: self,
            id: nodes.len() - 1,
        })
    }
}

impl<'t> Var<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.node(self.id).shape.clone()
    }

    pub fn len(&self) -> usize {
        self.tape.node(self.id).value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> Vec<f64> {
        self.tape.node(self.id).value.clone()
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> f64 {
        self.tape.node(self.id).value[0]
    }
}

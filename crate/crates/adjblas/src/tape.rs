//! A matrix-granularity reverse-mode tape.
//!
//! The tape records a straight-line program over whole scalars, vectors,
//! and matrices — the elemental operations are the product kernels and the
//! linear solve themselves, not their scalar entries. Each node stores its
//! primal value; solve nodes additionally own the LU factorization computed
//! at record time, so reverse sweeps never refactor.
//!
//! The adjoint rules are assignment-style; the tape owns their
//! generalization to shared subexpressions by accumulating (`+=`)
//! contributions into zero-initialized buffers during the reverse sweep.
//! Passive handles carry no buffer at all.
//!
//! A tape is single-writer while recording and read-only during reversal:
//! `reverse` takes `&self`, so concurrent sweeps over one tape into
//! distinct [`AdjointStore`]s are allowed.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::adjoint::{
    dot_adjoint, gemm_adjoint, gemv_adjoint, mul_adjoint, sandwich_adjoint, solve_adjoint,
};
use crate::blas::{dot, gemm, gemv};
use crate::dense::{DenseMatrix, DenseVector, Shape};
use crate::error::{Error, Result};
use crate::lu::LuFactorization;

/// Whether a recorded variable participates in differentiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activity {
    Active,
    Passive,
}

/// A scalar, vector, or matrix stored on the tape.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(f64),
    Vector(DenseVector),
    Matrix(DenseMatrix),
}

impl Value {
    pub fn shape(&self) -> Shape {
        match self {
            Self::Scalar(_) => Shape::Scalar,
            Self::Vector(v) => Shape::Vector(v.len()),
            Self::Matrix(m) => Shape::Matrix(m.rows(), m.cols()),
        }
    }

    pub fn zeros(shape: Shape) -> Self {
        match shape {
            Shape::Scalar => Self::Scalar(0.0),
            Shape::Vector(n) => Self::Vector(DenseVector::zeros(n)),
            Shape::Matrix(r, c) => Self::Matrix(DenseMatrix::zeros(r, c)),
        }
    }

    pub fn scalar(&self) -> Option<f64> {
        match self {
            Self::Scalar(s) => Some(*s),
            _ => None,
        }
    }

    pub fn vector(&self) -> Option<&DenseVector> {
        match self {
            Self::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn matrix(&self) -> Option<&DenseMatrix> {
        match self {
            Self::Matrix(m) => Some(m),
            _ => None,
        }
    }

    /// Largest entry magnitude; 0 for the zero value of any shape.
    pub fn norm_max(&self) -> f64 {
        match self {
            Self::Scalar(s) => s.abs(),
            Self::Vector(v) => v.norm_max(),
            Self::Matrix(m) => m.norm_max(),
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Self::Scalar(s) => s.is_finite(),
            Self::Vector(v) => (0..v.len()).all(|i| v[i].is_finite()),
            Self::Matrix(m) => {
                (0..m.cols()).all(|j| (0..m.rows()).all(|i| m.get(i, j).is_finite()))
            }
        }
    }

    pub(crate) fn add_in_place(&mut self, delta: &Value) -> Result<()> {
        match (&mut *self, delta) {
            (Self::Scalar(a), Self::Scalar(b)) => {
                *a += b;
                Ok(())
            }
            (Self::Vector(a), Self::Vector(b)) => {
                *a = a.add(b)?;
                Ok(())
            }
            (Self::Matrix(a), Self::Matrix(b)) => {
                *a = a.add(b)?;
                Ok(())
            }
            (a, b) => Err(Error::dim(
                "adjoint accumulate",
                format!("{} vs {}", a.shape(), b.shape()),
            )),
        }
    }

    fn add(&self, other: &Value) -> Result<Value> {
        let mut out = self.clone();
        out.add_in_place(other)?;
        Ok(out)
    }

    fn scale(&self, c: f64) -> Value {
        match self {
            Self::Scalar(s) => Self::Scalar(c * s),
            Self::Vector(v) => Self::Vector(v.scale(c)),
            Self::Matrix(m) => Self::Matrix(m.scale(c)),
        }
    }
}

impl From<f64> for Value {
    fn from(s: f64) -> Self {
        Self::Scalar(s)
    }
}

impl From<DenseVector> for Value {
    fn from(v: DenseVector) -> Self {
        Self::Vector(v)
    }
}

impl From<DenseMatrix> for Value {
    fn from(m: DenseMatrix) -> Self {
        Self::Matrix(m)
    }
}

/// The closed set of recordable operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    /// Elementwise sum of two same-shape values.
    Add,
    /// Passive scalar times a value.
    Scale,
    /// Product of two scalars.
    Mul,
    /// Inner product of two vectors.
    Dot,
    /// Matrix-vector product.
    Gemv,
    /// Matrix-matrix product.
    Gemm,
    /// `A * X * B` with passive outer factors.
    Sandwich,
    /// `x = A^{-1} b`; factors A at record time.
    Solve,
}

impl OpKind {
    fn name(self) -> &'static str {
        match self {
            Self::Add => "add",
            Self::Scale => "scale",
            Self::Mul => "mul",
            Self::Dot => "dot",
            Self::Gemv => "gemv",
            Self::Gemm => "gemm",
            Self::Sandwich => "sandwich",
            Self::Solve => "solve",
        }
    }

    fn arity(self) -> usize {
        match self {
            Self::Sandwich => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum NodeKind {
    Input,
    Op(OpKind),
}

impl NodeKind {
    fn name(self) -> &'static str {
        match self {
            Self::Input => "input",
            Self::Op(k) => k.name(),
        }
    }
}

/// A reference to one recorded node. Handles are only valid on the tape
/// that issued them; use on any other tape is detected and rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeHandle {
    tape_id: u64,
    id: usize,
    shape: Shape,
    activity: Activity,
}

impl NodeHandle {
    pub fn id(&self) -> usize {
        self.id
    }

    pub(crate) fn tape_id(&self) -> u64 {
        self.tape_id
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn activity(&self) -> Activity {
        self.activity
    }

    pub fn is_active(&self) -> bool {
        self.activity == Activity::Active
    }
}

#[derive(Debug)]
pub(crate) struct TapeNode {
    pub(crate) kind: NodeKind,
    pub(crate) inputs: Vec<usize>,
    pub(crate) primal: Value,
    pub(crate) activity: Activity,
    pub(crate) aux: Option<LuFactorization>,
}

static NEXT_TAPE_ID: AtomicU64 = AtomicU64::new(0);

/// A recorded straight-line program over matrix-level elemental operations.
#[derive(Debug)]
pub struct Tape {
    id: u64,
    nodes: Vec<TapeNode>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self { id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed), nodes: Vec::new() }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub(crate) fn tape_id(&self) -> u64 {
        self.id
    }

    pub(crate) fn node(&self, id: usize) -> &TapeNode {
        &self.nodes[id]
    }

    fn handle_for(&self, id: usize) -> NodeHandle {
        let node = &self.nodes[id];
        NodeHandle { tape_id: self.id, id, shape: node.primal.shape(), activity: node.activity }
    }

    /// Validates that `h` refers to a node of this tape and returns its id.
    fn check_handle(&self, h: NodeHandle) -> Result<usize> {
        if h.id >= self.nodes.len() {
            return Err(Error::UnknownHandle);
        }
        if h.tape_id != self.id {
            return Err(Error::ForeignHandle);
        }
        Ok(h.id)
    }

    /// Records an independent variable. Finite, non-empty values only.
    pub fn record_input(&mut self, value: Value, activity: Activity) -> Result<NodeHandle> {
        if value.shape().num_entries() == 0 {
            return Err(Error::EmptyValue);
        }
        if !value.is_finite() {
            return Err(Error::NonFinite { context: "tape input".to_string() });
        }
        self.nodes.push(TapeNode {
            kind: NodeKind::Input,
            inputs: Vec::new(),
            primal: value,
            activity,
            aux: None,
        });
        Ok(self.handle_for(self.nodes.len() - 1))
    }

    /// Records one elemental operation, computes and stores its primal
    /// value, and returns a handle to the result. The result is active iff
    /// any input is active. For [`OpKind::Solve`] the matrix operand is
    /// factored here, once, and the factorization is kept on the node.
    pub fn record_op(&mut self, kind: OpKind, inputs: &[NodeHandle]) -> Result<NodeHandle> {
        if inputs.len() != kind.arity() {
            return Err(Error::InvalidArgument {
                what: format!("{kind} takes {} inputs, got {}", kind.arity(), inputs.len()),
            });
        }
        let ids: Vec<usize> =
            inputs.iter().map(|h| self.check_handle(*h)).collect::<Result<_>>()?;

        let mut aux = None;
        let primal = match kind {
            OpKind::Add => {
                let (a, b) = (&self.nodes[ids[0]].primal, &self.nodes[ids[1]].primal);
                a.add(b).map_err(|_| {
                    Error::dim("add", format!("{} vs {}", a.shape(), b.shape()))
                })?
            }
            OpKind::Scale => {
                let c = &self.nodes[ids[0]];
                let Some(factor) = c.primal.scalar() else {
                    return Err(Error::dim(
                        "scale",
                        format!("factor must be a scalar, got {}", c.primal.shape()),
                    ));
                };
                if c.activity != Activity::Passive {
                    return Err(Error::ActivityViolation {
                        op: "scale",
                        detail: "scale factor must be passive (use mul for active scalars)",
                    });
                }
                self.nodes[ids[1]].primal.scale(factor)
            }
            OpKind::Mul => {
                let (a, x) = (&self.nodes[ids[0]].primal, &self.nodes[ids[1]].primal);
                match (a.scalar(), x.scalar()) {
                    (Some(a), Some(x)) => Value::Scalar(a * x),
                    _ => {
                        return Err(Error::dim(
                            "mul",
                            format!("expects two scalars, got {} and {}", a.shape(), x.shape()),
                        ))
                    }
                }
            }
            OpKind::Dot => {
                let (a, x) = (&self.nodes[ids[0]].primal, &self.nodes[ids[1]].primal);
                match (a.vector(), x.vector()) {
                    (Some(a), Some(x)) => Value::Scalar(dot(a, x)?),
                    _ => {
                        return Err(Error::dim(
                            "dot",
                            format!("expects two vectors, got {} and {}", a.shape(), x.shape()),
                        ))
                    }
                }
            }
            OpKind::Gemv => {
                let (a, x) = (&self.nodes[ids[0]].primal, &self.nodes[ids[1]].primal);
                match (a.matrix(), x.vector()) {
                    (Some(a), Some(x)) => Value::Vector(gemv(a, x)?),
                    _ => {
                        return Err(Error::dim(
                            "gemv",
                            format!(
                                "expects a matrix and a vector, got {} and {}",
                                a.shape(),
                                x.shape()
                            ),
                        ))
                    }
                }
            }
            OpKind::Gemm => {
                let (a, x) = (&self.nodes[ids[0]].primal, &self.nodes[ids[1]].primal);
                match (a.matrix(), x.matrix()) {
                    (Some(a), Some(x)) => Value::Matrix(gemm(a, x)?),
                    _ => {
                        return Err(Error::dim(
                            "gemm",
                            format!("expects two matrices, got {} and {}", a.shape(), x.shape()),
                        ))
                    }
                }
            }
            OpKind::Sandwich => {
                for (slot, name) in [(0, "left"), (2, "right")] {
                    if self.nodes[ids[slot]].activity != Activity::Passive {
                        return Err(Error::ActivityViolation {
                            op: "sandwich",
                            detail: if name == "left" {
                                "left outer factor must be passive"
                            } else {
                                "right outer factor must be passive"
                            },
                        });
                    }
                }
                let (a, x, b) = (
                    &self.nodes[ids[0]].primal,
                    &self.nodes[ids[1]].primal,
                    &self.nodes[ids[2]].primal,
                );
                match (a.matrix(), x.matrix(), b.matrix()) {
                    (Some(a), Some(x), Some(b)) => Value::Matrix(gemm(&gemm(a, x)?, b)?),
                    _ => {
                        return Err(Error::dim(
                            "sandwich",
                            format!(
                                "expects three matrices, got {}, {} and {}",
                                a.shape(),
                                x.shape(),
                                b.shape()
                            ),
                        ))
                    }
                }
            }
            OpKind::Solve => {
                let (a, b) = (&self.nodes[ids[0]].primal, &self.nodes[ids[1]].primal);
                match (a.matrix(), b.vector()) {
                    (Some(a), Some(b)) => {
                        let f = LuFactorization::factor(a)?;
                        let x = f.solve(b)?;
                        aux = Some(f);
                        Value::Vector(x)
                    }
                    _ => {
                        return Err(Error::dim(
                            "solve",
                            format!(
                                "expects a matrix and a vector, got {} and {}",
                                a.shape(),
                                b.shape()
                            ),
                        ))
                    }
                }
            }
        };

        let activity = if ids.iter().any(|&i| self.nodes[i].activity == Activity::Active) {
            Activity::Active
        } else {
            Activity::Passive
        };
        self.nodes.push(TapeNode {
            kind: NodeKind::Op(kind),
            inputs: ids,
            primal,
            activity,
            aux,
        });
        Ok(self.handle_for(self.nodes.len() - 1))
    }

    /// Returns the stored primal value of a node.
    pub fn value_of(&self, h: NodeHandle) -> Result<&Value> {
        let id = self.check_handle(h)?;
        Ok(&self.nodes[id].primal)
    }

    /// Runs one reverse sweep from `seed_handle`, which must be active and
    /// shape-matched with `seed_value`. Buffers for every active node are
    /// zero-initialized, the seed is set, and nodes are visited in reverse
    /// record order, accumulating each adjoint rule's contribution into the
    /// buffers of active inputs. Solve nodes reuse their stored
    /// factorization; no factorization happens here.
    pub fn reverse(&self, seed_handle: NodeHandle, seed_value: Value) -> Result<AdjointStore> {
        let seed_id = self.check_handle(seed_handle)?;
        let seed_node = &self.nodes[seed_id];
        if seed_node.activity != Activity::Active {
            return Err(Error::PassiveSeed);
        }
        if seed_value.shape() != seed_node.primal.shape() {
            return Err(Error::dim(
                "reverse seed",
                format!("node is {}, seed is {}", seed_node.primal.shape(), seed_value.shape()),
            ));
        }

        let mut buffers: Vec<Option<Value>> = self
            .nodes
            .iter()
            .map(|n| {
                (n.activity == Activity::Active).then(|| Value::zeros(n.primal.shape()))
            })
            .collect();
        buffers[seed_id] = Some(seed_value);

        for i in (0..=seed_id).rev() {
            let adj = match &buffers[i] {
                Some(v) => v.clone(),
                None => continue,
            };
            let node = &self.nodes[i];
            let NodeKind::Op(kind) = node.kind else { continue };
            match kind {
                OpKind::Add => {
                    accumulate(&mut buffers, node.inputs[0], &adj)?;
                    accumulate(&mut buffers, node.inputs[1], &adj)?;
                }
                OpKind::Scale => {
                    let c = primal_scalar(&self.nodes[node.inputs[0]].primal);
                    accumulate(&mut buffers, node.inputs[1], &adj.scale(c))?;
                }
                OpKind::Mul => {
                    let a = primal_scalar(&self.nodes[node.inputs[0]].primal);
                    let x = primal_scalar(&self.nodes[node.inputs[1]].primal);
                    let (a_adj, x_adj) = mul_adjoint(a, x, primal_scalar(&adj));
                    accumulate(&mut buffers, node.inputs[0], &Value::Scalar(a_adj))?;
                    accumulate(&mut buffers, node.inputs[1], &Value::Scalar(x_adj))?;
                }
                OpKind::Dot => {
                    let a = primal_vector(&self.nodes[node.inputs[0]].primal);
                    let x = primal_vector(&self.nodes[node.inputs[1]].primal);
                    let (a_adj, x_adj) = dot_adjoint(a, x, primal_scalar(&adj))?;
                    accumulate(&mut buffers, node.inputs[0], &Value::Vector(a_adj))?;
                    accumulate(&mut buffers, node.inputs[1], &Value::Vector(x_adj))?;
                }
                OpKind::Gemv => {
                    let a = primal_matrix(&self.nodes[node.inputs[0]].primal);
                    let x = primal_vector(&self.nodes[node.inputs[1]].primal);
                    let (a_adj, x_adj) = gemv_adjoint(a, x, primal_vector(&adj))?;
                    accumulate(&mut buffers, node.inputs[0], &Value::Matrix(a_adj))?;
                    accumulate(&mut buffers, node.inputs[1], &Value::Vector(x_adj))?;
                }
                OpKind::Gemm => {
                    let a = primal_matrix(&self.nodes[node.inputs[0]].primal);
                    let x = primal_matrix(&self.nodes[node.inputs[1]].primal);
                    let (a_adj, x_adj) = gemm_adjoint(a, x, primal_matrix(&adj))?;
                    accumulate(&mut buffers, node.inputs[0], &Value::Matrix(a_adj))?;
                    accumulate(&mut buffers, node.inputs[1], &Value::Matrix(x_adj))?;
                }
                OpKind::Sandwich => {
                    let a = primal_matrix(&self.nodes[node.inputs[0]].primal);
                    let b = primal_matrix(&self.nodes[node.inputs[2]].primal);
                    let x_adj = sandwich_adjoint(a, b, primal_matrix(&adj))?;
                    accumulate(&mut buffers, node.inputs[1], &Value::Matrix(x_adj))?;
                }
                OpKind::Solve => {
                    let f = node.aux.as_ref().expect("solve node owns a factorization");
                    let x = primal_vector(&node.primal);
                    let (b_adj, a_adj) = solve_adjoint(f, x, primal_vector(&adj))?;
                    accumulate(&mut buffers, node.inputs[0], &Value::Matrix(a_adj))?;
                    accumulate(&mut buffers, node.inputs[1], &Value::Vector(b_adj))?;
                }
            }
        }

        Ok(AdjointStore { tape_id: self.id, buffers })
    }

    /// Textual listing of the recorded program, one node per line:
    /// `id kind shape inputs` with `-` when a node has no inputs.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let inputs = if node.inputs.is_empty() {
                "-".to_string()
            } else {
                node.inputs.iter().map(|id| id.to_string()).collect::<Vec<_>>().join(" ")
            };
            out.push_str(&format!(
                "{i} {} {} {inputs}\n",
                node.kind.name(),
                node.primal.shape()
            ));
        }
        out
    }
}

fn accumulate(buffers: &mut [Option<Value>], id: usize, delta: &Value) -> Result<()> {
    if let Some(buf) = buffers[id].as_mut() {
        buf.add_in_place(delta)?;
    }
    Ok(())
}

fn primal_scalar(v: &Value) -> f64 {
    v.scalar().expect("tape invariant: scalar operand")
}

fn primal_vector(v: &Value) -> &DenseVector {
    v.vector().expect("tape invariant: vector operand")
}

fn primal_matrix(v: &Value) -> &DenseMatrix {
    v.matrix().expect("tape invariant: matrix operand")
}

/// The result of one reverse sweep: a shape-matched adjoint buffer per
/// active node of the originating tape.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointStore {
    tape_id: u64,
    buffers: Vec<Option<Value>>,
}

impl AdjointStore {
    pub(crate) fn from_buffers(tape_id: u64, buffers: Vec<Option<Value>>) -> Self {
        Self { tape_id, buffers }
    }

    /// Accumulated adjoint of an active handle.
    pub fn adjoint_of(&self, h: NodeHandle) -> Result<&Value> {
        if h.id >= self.buffers.len() {
            return Err(Error::UnknownHandle);
        }
        if h.tape_id != self.tape_id {
            return Err(Error::ForeignHandle);
        }
        self.buffers[h.id].as_ref().ok_or(Error::PassiveAdjoint)
    }
}

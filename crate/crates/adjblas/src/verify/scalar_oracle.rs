//! A scalar-level reverse-mode oracle for recorded tapes.
//!
//! Basic AD treats only the arithmetic operators as elemental. This oracle
//! takes a recorded matrix-granularity tape and re-differentiates it the
//! basic way: every matrix operation is expanded into its defining scalar
//! loops (dot as a sum of products, gemv row by row, gemm entry by entry),
//! a scalar Wengert list is built from `+` and `*` nodes alone, and a
//! scalar reverse sweep applies nothing but the scalar adjoint rules. The
//! matrix-level adjoint rules under test are never consulted, so agreement
//! between this oracle and [`Tape::reverse`] cross-checks every rule and
//! the fan-out accumulation at once.
//!
//! Solve nodes cannot be expanded into `+` and `*` (substitution divides,
//! and pivot selection is piecewise-constant), so the oracle differentiates
//! the implicit equation `A·x = b` at scalar level instead: it performs its
//! own forward and transposed substitutions entry by entry against the
//! frozen factorization stored on the node, treated as constant data. Only
//! the factor entries are shared with the code under test — none of its
//! solve or adjoint routines run here.

use std::collections::HashMap;

use crate::dense::{DenseMatrix, DenseVector, Shape};
use crate::error::{Error, Result};
use crate::tape::{Activity, AdjointStore, NodeHandle, NodeKind, OpKind, Tape, Value};

/// One scalar node: a leaf, a sum, or a product.
#[derive(Debug, Clone, Copy)]
enum SKind {
    Leaf,
    Add(usize, usize),
    Mul(usize, usize),
}

#[derive(Debug, Default)]
struct ScalarProgram {
    kinds: Vec<SKind>,
    values: Vec<f64>,
}

impl ScalarProgram {
    fn len(&self) -> usize {
        self.kinds.len()
    }

    fn push(&mut self, kind: SKind, value: f64) -> usize {
        self.kinds.push(kind);
        self.values.push(value);
        self.kinds.len() - 1
    }

    fn leaf(&mut self, value: f64) -> usize {
        self.push(SKind::Leaf, value)
    }

    fn add(&mut self, l: usize, r: usize) -> usize {
        let v = self.values[l] + self.values[r];
        self.push(SKind::Add(l, r), v)
    }

    fn mul(&mut self, l: usize, r: usize) -> usize {
        let v = self.values[l] * self.values[r];
        self.push(SKind::Mul(l, r), v)
    }

    /// Sum of pairwise products `Σ a_i·x_i`, the scalar expansion of dot.
    fn sum_of_products(&mut self, a: &[usize], x: &[usize]) -> usize {
        let mut acc = None;
        for (&ai, &xi) in a.iter().zip(x) {
            let p = self.mul(ai, xi);
            acc = Some(match acc {
                None => p,
                Some(prev) => self.add(prev, p),
            });
        }
        acc.expect("operands are non-empty by tape construction")
    }

    /// Scalar expansion of a matrix product: `a` is m×n, `x` is n×p, both
    /// as column-major id lists; returns the m×p result ids column-major.
    fn gemm_ids(
        &mut self,
        a: &[usize],
        (m, n): (usize, usize),
        x: &[usize],
        p: usize,
    ) -> Vec<usize> {
        let mut out = Vec::with_capacity(m * p);
        for j in 0..p {
            for i in 0..m {
                let row: Vec<usize> = (0..n).map(|k| a[k * m + i]).collect();
                let col = &x[j * n..(j + 1) * n];
                out.push(self.sum_of_products(&row, col));
            }
        }
        out
    }
}

/// A solve node awaiting its adjoint: scalar ids of its operands and
/// outputs plus the frozen factorization data.
#[derive(Debug)]
struct SolveBlock {
    n: usize,
    a_ids: Vec<usize>,
    b_ids: Vec<usize>,
    x_ids: Vec<usize>,
    packed: DenseMatrix,
    perm: Vec<usize>,
}

impl SolveBlock {
    /// Own forward/back substitution for `A x = b` over the frozen factors.
    fn solve_values(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[i] = b[self.perm[i]];
        }
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.packed.get(i, j) * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.packed.get(i, j) * x[j];
            }
            x[i] /= self.packed.get(i, i);
        }
        x
    }

    /// Own transposed substitution for `A^T y = c` over the frozen factors.
    #[allow(clippy::needless_range_loop)] // triangular index math stays readable as written
    fn solve_transposed_values(&self, c: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mut acc = c[i];
            for j in 0..i {
                acc -= self.packed.get(j, i) * w[j];
            }
            w[i] = acc / self.packed.get(i, i);
        }
        for i in (0..n).rev() {
            let mut acc = w[i];
            for j in i + 1..n {
                acc -= self.packed.get(j, i) * w[j];
            }
            w[i] = acc;
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[self.perm[i]] = w[i];
        }
        y
    }

    /// Reverse-mode step for the implicit equation: reads the accumulated
    /// adjoints of `x`, produces `b_adj = A^{-T} x_adj` by its own
    /// substitution, and accumulates `b_adj` into `b` and `−b_adj·x^T`
    /// into `A`.
    fn propagate(&self, values: &[f64], adj: &mut [f64]) {
        let n = self.n;
        let x_adj: Vec<f64> = self.x_ids.iter().map(|&id| adj[id]).collect();
        let b_adj = self.solve_transposed_values(&x_adj);
        for i in 0..n {
            adj[self.b_ids[i]] += b_adj[i];
        }
        for j in 0..n {
            let xj = values[self.x_ids[j]];
            for i in 0..n {
                adj[self.a_ids[j * n + i]] += -b_adj[i] * xj;
            }
        }
    }
}

fn entries(v: &Value) -> Vec<f64> {
    match v {
        Value::Scalar(s) => vec![*s],
        Value::Vector(x) => x.as_slice().to_vec(),
        Value::Matrix(m) => m.as_slice().to_vec(),
    }
}

fn rebuild(shape: Shape, entries: &[f64]) -> Result<Value> {
    Ok(match shape {
        Shape::Scalar => Value::Scalar(entries[0]),
        Shape::Vector(_) => Value::Vector(DenseVector::from_slice(entries)?),
        Shape::Matrix(r, c) => Value::Matrix(DenseMatrix::from_col_major(r, c, entries)?),
    })
}

fn matrix_dims(shape: Shape) -> (usize, usize) {
    match shape {
        Shape::Matrix(r, c) => (r, c),
        _ => unreachable!("tape invariant: matrix operand"),
    }
}

/// Differentiates a recorded tape with scalar-level basic AD and returns
/// an adjoint store equivalent to what [`Tape::reverse`] produces.
///
/// Seeding rules match `reverse`: the seed handle must be active on this
/// tape and `seed_value` shape-matched.
pub fn scalar_oracle_adjoint(
    tape: &Tape,
    seed_handle: NodeHandle,
    seed_value: Value,
) -> Result<AdjointStore> {
    if seed_handle.id() >= tape.node_count() {
        return Err(Error::UnknownHandle);
    }
    if seed_handle.tape_id() != tape.tape_id() {
        return Err(Error::ForeignHandle);
    }
    let seed_node = tape.node(seed_handle.id());
    if seed_node.activity != Activity::Active {
        return Err(Error::PassiveSeed);
    }
    if seed_value.shape() != seed_node.primal.shape() {
        return Err(Error::dim(
            "oracle seed",
            format!("node is {}, seed is {}", seed_node.primal.shape(), seed_value.shape()),
        ));
    }

    // Forward expansion: one scalar id per entry of every node, in
    // column-major order, plus one deferred block per solve node.
    let mut prog = ScalarProgram::default();
    let mut expansions: Vec<Vec<usize>> = Vec::with_capacity(tape.node_count());
    let mut blocks: Vec<SolveBlock> = Vec::new();
    let mut triggers: HashMap<usize, usize> = HashMap::new();

    for id in 0..tape.node_count() {
        let node = tape.node(id);
        let expansion: Vec<usize> = match node.kind {
            NodeKind::Input => {
                entries(&node.primal).into_iter().map(|v| prog.leaf(v)).collect()
            }
            NodeKind::Op(op) => {
                let input = |slot: usize| -> &[usize] { &expansions[node.inputs[slot]] };
                let input_shape =
                    |slot: usize| tape.node(node.inputs[slot]).primal.shape();
                match op {
                    OpKind::Add => {
                        let (l, r) = (input(0).to_vec(), input(1).to_vec());
                        l.iter().zip(&r).map(|(&a, &b)| prog.add(a, b)).collect()
                    }
                    OpKind::Scale => {
                        let c = input(0)[0];
                        let x = input(1).to_vec();
                        x.iter().map(|&xi| prog.mul(c, xi)).collect()
                    }
                    OpKind::Mul => vec![prog.mul(input(0)[0], input(1)[0])],
                    OpKind::Dot => {
                        let (a, x) = (input(0).to_vec(), input(1).to_vec());
                        vec![prog.sum_of_products(&a, &x)]
                    }
                    OpKind::Gemv => {
                        let (m, n) = matrix_dims(input_shape(0));
                        let (a, x) = (input(0).to_vec(), input(1).to_vec());
                        (0..m)
                            .map(|i| {
                                let row: Vec<usize> =
                                    (0..n).map(|j| a[j * m + i]).collect();
                                prog.sum_of_products(&row, &x)
                            })
                            .collect()
                    }
                    OpKind::Gemm => {
                        let dims = matrix_dims(input_shape(0));
                        let (_, p) = matrix_dims(input_shape(1));
                        let (a, x) = (input(0).to_vec(), input(1).to_vec());
                        prog.gemm_ids(&a, dims, &x, p)
                    }
                    OpKind::Sandwich => {
                        let (m, n) = matrix_dims(input_shape(0));
                        let (_, p) = matrix_dims(input_shape(1));
                        let (_, q) = matrix_dims(input_shape(2));
                        let (a, x, b) =
                            (input(0).to_vec(), input(1).to_vec(), input(2).to_vec());
                        let ax = prog.gemm_ids(&a, (m, n), &x, p);
                        prog.gemm_ids(&ax, (m, p), &b, q)
                    }
                    OpKind::Solve => {
                        let (n, _) = matrix_dims(input_shape(0));
                        let f = node.aux.as_ref().expect("solve node owns a factorization");
                        let block = SolveBlock {
                            n,
                            a_ids: input(0).to_vec(),
                            b_ids: input(1).to_vec(),
                            x_ids: Vec::new(),
                            packed: f.packed().clone(),
                            perm: f.permutation().to_vec(),
                        };
                        let b_vals: Vec<f64> =
                            block.b_ids.iter().map(|&i| prog.values[i]).collect();
                        let x_vals = block.solve_values(&b_vals);
                        let x_ids: Vec<usize> =
                            x_vals.into_iter().map(|v| prog.leaf(v)).collect();
                        let trigger = *x_ids.last().expect("solve output is non-empty");
                        triggers.insert(trigger, blocks.len());
                        blocks.push(SolveBlock { x_ids: x_ids.clone(), ..block });
                        x_ids
                    }
                }
            }
        };
        expansions.push(expansion);
    }

    // Scalar reverse sweep: seed, then walk ids in descending order
    // applying only the scalar adjoint rules, firing each solve block when
    // the scan reaches its last output id (all consumers already visited).
    let mut adj = vec![0.0; prog.len()];
    for (&sid, val) in expansions[seed_handle.id()].iter().zip(entries(&seed_value)) {
        adj[sid] = val;
    }
    for id in (0..prog.len()).rev() {
        if let Some(&bidx) = triggers.get(&id) {
            blocks[bidx].propagate(&prog.values, &mut adj);
        }
        match prog.kinds[id] {
            SKind::Leaf => {}
            SKind::Add(l, r) => {
                let d = adj[id];
                adj[l] += d;
                adj[r] += d;
            }
            SKind::Mul(l, r) => {
                let d = adj[id];
                adj[l] += prog.values[r] * d;
                adj[r] += prog.values[l] * d;
            }
        }
    }

    // Collect per-node adjoints for active nodes, in the tape's layout.
    let mut buffers: Vec<Option<Value>> = Vec::with_capacity(tape.node_count());
    for (id, expansion) in expansions.iter().enumerate() {
        let node = tape.node(id);
        if node.activity != Activity::Active {
            buffers.push(None);
            continue;
        }
        let vals: Vec<f64> = expansion.iter().map(|&sid| adj[sid]).collect();
        buffers.push(Some(rebuild(node.primal.shape(), &vals)?));
    }
    Ok(AdjointStore::from_buffers(tape.tape_id(), buffers))
}

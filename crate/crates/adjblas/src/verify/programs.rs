//! Random straight-line programs over the tape's elemental operations.
//!
//! The generator builds arbitrary well-formed DAGs — shared subexpressions,
//! mixed shapes, passive constants, solves against well-conditioned
//! draws — and always finishes with an active scalar output so a reverse
//! sweep can be seeded with 1. Callers can force the presence of a solve
//! node and of fan-out, which the oracle-equivalence acceptance check
//! requires; everything else is left to the seeded generator.

use std::collections::HashMap;

use rand::Rng;

use crate::dense::Shape;
use crate::error::{Error, Result};
use crate::tape::{Activity, NodeHandle, OpKind, Tape, Value};
use crate::verify::draws::{random_matrix, random_vector, well_conditioned_matrix};

/// A generated program plus the facts the equivalence checks care about.
#[derive(Debug)]
pub struct GeneratedProgram {
    pub tape: Tape,
    /// Every recorded input, active and passive, in record order.
    pub inputs: Vec<NodeHandle>,
    /// Active scalar output; seed it with 1 to differentiate.
    pub output: NodeHandle,
    /// Some handle is consumed by two or more operand slots.
    pub has_fanout: bool,
    /// At least one solve node was recorded.
    pub has_solve: bool,
}

struct Builder<'a, R: Rng + ?Sized> {
    rng: &'a mut R,
    tape: Tape,
    inputs: Vec<NodeHandle>,
    pool: Vec<NodeHandle>,
    consumed: HashMap<usize, usize>,
    last: Option<NodeHandle>,
    solve_outputs: Vec<NodeHandle>,
    has_fanout: bool,
    has_solve: bool,
    max_dim: usize,
}

impl<R: Rng + ?Sized> Builder<'_, R> {
    fn dim(&mut self) -> usize {
        self.rng.random_range(1..=self.max_dim)
    }

    fn fresh_scalar(&mut self, value: f64, activity: Activity) -> Result<NodeHandle> {
        let h = self.tape.record_input(Value::Scalar(value), activity)?;
        self.inputs.push(h);
        self.pool.push(h);
        Ok(h)
    }

    fn fresh_vector(&mut self, n: usize, activity: Activity) -> Result<NodeHandle> {
        let v = random_vector(self.rng, n);
        let h = self.tape.record_input(v.into(), activity)?;
        self.inputs.push(h);
        self.pool.push(h);
        Ok(h)
    }

    fn fresh_matrix(&mut self, rows: usize, cols: usize) -> Result<NodeHandle> {
        let m = random_matrix(self.rng, rows, cols);
        let h = self.tape.record_input(m.into(), Activity::Active)?;
        self.inputs.push(h);
        self.pool.push(h);
        Ok(h)
    }

    fn fresh_well_conditioned(&mut self, n: usize) -> Result<NodeHandle> {
        let m = well_conditioned_matrix(self.rng, n);
        let h = self.tape.record_input(m.into(), Activity::Active)?;
        self.inputs.push(h);
        self.pool.push(h);
        Ok(h)
    }

    /// Random pooled handle satisfying `pred`, if any.
    fn pick(&mut self, pred: impl Fn(&NodeHandle) -> bool) -> Option<NodeHandle> {
        let candidates: Vec<NodeHandle> =
            self.pool.iter().copied().filter(pred).collect();
        if candidates.is_empty() {
            None
        } else {
            Some(candidates[self.rng.random_range(0..candidates.len())])
        }
    }

    fn pick_vector(&mut self) -> Result<NodeHandle> {
        match self.pick(|h| matches!(h.shape(), Shape::Vector(_))) {
            Some(h) => Ok(h),
            None => {
                let n = self.dim();
                self.fresh_vector(n, Activity::Active)
            }
        }
    }

    fn pick_vector_of(&mut self, n: usize) -> Result<NodeHandle> {
        match self.pick(|h| h.shape() == Shape::Vector(n)) {
            Some(h) => Ok(h),
            None => self.fresh_vector(n, Activity::Active),
        }
    }

    fn pick_scalar(&mut self) -> Result<NodeHandle> {
        match self.pick(|h| h.shape() == Shape::Scalar) {
            Some(h) => Ok(h),
            None => {
                let v = self.rng.random_range(-1.0..=1.0);
                self.fresh_scalar(v, Activity::Active)
            }
        }
    }

    fn pick_matrix(&mut self) -> Result<NodeHandle> {
        match self.pick(|h| matches!(h.shape(), Shape::Matrix(_, _))) {
            Some(h) => Ok(h),
            None => {
                let (r, c) = (self.dim(), self.dim());
                self.fresh_matrix(r, c)
            }
        }
    }

    fn record(&mut self, kind: OpKind, operands: &[NodeHandle]) -> Result<NodeHandle> {
        let h = self.tape.record_op(kind, operands)?;
        for op in operands {
            let count = self.consumed.entry(op.id()).or_insert(0);
            *count += 1;
            if *count >= 2 {
                self.has_fanout = true;
            }
        }
        self.pool.push(h);
        self.last = Some(h);
        Ok(h)
    }

    fn op_add(&mut self) -> Result<NodeHandle> {
        let a = self.pool[self.rng.random_range(0..self.pool.len())];
        let b = self
            .pick(|h| h.shape() == a.shape())
            .expect("a itself has a matching shape");
        self.record(OpKind::Add, &[a, b])
    }

    fn op_scale(&mut self) -> Result<NodeHandle> {
        let factor = self.rng.random_range(-1.0..=1.0);
        let c = self.fresh_scalar(factor, Activity::Passive)?;
        let x = self.pool[self.rng.random_range(0..self.pool.len() - 1)]; // exclude c
        self.record(OpKind::Scale, &[c, x])
    }

    fn op_mul(&mut self) -> Result<NodeHandle> {
        let a = self.pick_scalar()?;
        let x = self.pick_scalar()?;
        self.record(OpKind::Mul, &[a, x])
    }

    fn op_dot(&mut self) -> Result<NodeHandle> {
        let a = self.pick_vector()?;
        let Shape::Vector(n) = a.shape() else { unreachable!() };
        let x = self.pick_vector_of(n)?;
        self.record(OpKind::Dot, &[a, x])
    }

    fn op_gemv(&mut self) -> Result<NodeHandle> {
        let a = self.pick_matrix()?;
        let Shape::Matrix(_, c) = a.shape() else { unreachable!() };
        let x = self.pick_vector_of(c)?;
        self.record(OpKind::Gemv, &[a, x])
    }

    fn op_gemm(&mut self) -> Result<NodeHandle> {
        let a = self.pick_matrix()?;
        let Shape::Matrix(_, c) = a.shape() else { unreachable!() };
        let x = match self.pick(|h| matches!(h.shape(), Shape::Matrix(r, _) if r == c)) {
            Some(h) => h,
            None => {
                let p = self.dim();
                self.fresh_matrix(c, p)?
            }
        };
        self.record(OpKind::Gemm, &[a, x])
    }

    /// Solve against a fresh well-conditioned matrix, sometimes scaled by a
    /// passive factor so the matrix operand is a computed node rather than
    /// a leaf.
    fn op_solve(&mut self) -> Result<NodeHandle> {
        let n = self.dim();
        let mut a = self.fresh_well_conditioned(n)?;
        if self.rng.random_bool(0.5) {
            let factor = self.rng.random_range(0.5..=1.5);
            let c = self.fresh_scalar(factor, Activity::Passive)?;
            a = self.record(OpKind::Scale, &[c, a])?;
        }
        let b = self.pick_vector_of(n)?;
        let x = self.record(OpKind::Solve, &[a, b])?;
        self.solve_outputs.push(x);
        self.has_solve = true;
        Ok(x)
    }

    fn random_op(&mut self) -> Result<NodeHandle> {
        const MENU: [OpKind; 11] = [
            OpKind::Add,
            OpKind::Add,
            OpKind::Scale,
            OpKind::Mul,
            OpKind::Dot,
            OpKind::Dot,
            OpKind::Gemv,
            OpKind::Gemv,
            OpKind::Gemm,
            OpKind::Solve,
            OpKind::Solve,
        ];
        match MENU[self.rng.random_range(0..MENU.len())] {
            OpKind::Add => self.op_add(),
            OpKind::Scale => self.op_scale(),
            OpKind::Mul => self.op_mul(),
            OpKind::Dot => self.op_dot(),
            OpKind::Gemv => self.op_gemv(),
            OpKind::Gemm => self.op_gemm(),
            OpKind::Solve => self.op_solve(),
            OpKind::Sandwich => unreachable!("not on the menu"),
        }
    }

    /// Collapses any handle to an active scalar.
    fn reduce_to_scalar(&mut self, h: NodeHandle) -> Result<NodeHandle> {
        let vector = match h.shape() {
            Shape::Scalar => {
                return if h.is_active() {
                    Ok(h)
                } else {
                    let s = self.fresh_scalar(1.0, Activity::Active)?;
                    self.record(OpKind::Mul, &[h, s])
                };
            }
            Shape::Vector(_) => h,
            Shape::Matrix(_, c) => {
                let v = self.fresh_vector(c, Activity::Active)?;
                self.record(OpKind::Gemv, &[h, v])?
            }
        };
        let Shape::Vector(n) = vector.shape() else { unreachable!() };
        let partner = if vector.is_active() {
            self.pick_vector_of(n)?
        } else {
            self.fresh_vector(n, Activity::Active)?
        };
        self.record(OpKind::Dot, &[vector, partner])
    }
}

/// Generates one seeded random program with at most `max_depth` drawn
/// operations (plus the reductions that produce the scalar output) and all
/// dimensions in `1..=max_dim`.
pub fn random_program<R: Rng + ?Sized>(
    rng: &mut R,
    max_depth: usize,
    max_dim: usize,
    force_solve: bool,
    force_fanout: bool,
) -> Result<GeneratedProgram> {
    if max_depth == 0 || max_dim == 0 {
        return Err(Error::InvalidArgument {
            what: "program generation needs max_depth >= 1 and max_dim >= 1".into(),
        });
    }

    let mut b = Builder {
        rng,
        tape: Tape::new(),
        inputs: Vec::new(),
        pool: Vec::new(),
        consumed: HashMap::new(),
        last: None,
        solve_outputs: Vec::new(),
        has_fanout: false,
        has_solve: false,
        max_dim,
    };

    // Starting material: always one active vector, sometimes more.
    let n0 = b.dim();
    let first = b.fresh_vector(n0, Activity::Active)?;
    b.last = Some(first);
    if b.rng.random_bool(0.6) {
        let (r, c) = (b.dim(), b.dim());
        b.fresh_matrix(r, c)?;
    }
    if b.rng.random_bool(0.15) {
        let n = b.dim();
        b.fresh_vector(n, Activity::Passive)?;
    }

    let depth = b.rng.random_range(1..=max_depth);
    for _ in 0..depth {
        b.random_op()?;
    }
    if force_solve && !b.has_solve {
        b.op_solve()?;
    }
    if force_fanout && !b.has_fanout {
        let v = b.pick_vector()?;
        b.record(OpKind::Dot, &[v, v])?;
    }

    // Reduce to one active scalar that depends on every solve output.
    let last = b.last.expect("at least one value exists");
    let mut y = b.reduce_to_scalar(last)?;
    for x in b.solve_outputs.clone() {
        let s = b.reduce_to_scalar(x)?;
        y = b.record(OpKind::Add, &[y, s])?;
    }

    Ok(GeneratedProgram {
        tape: b.tape,
        inputs: b.inputs,
        output: y,
        has_fanout: b.has_fanout,
        has_solve: b.has_solve,
    })
}

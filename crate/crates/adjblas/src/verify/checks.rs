//! Implementations of the non-identity suite checks: finite-difference
//! agreement for every tangent rule, the two solve-adjoint cross-checks,
//! tape-versus-oracle equivalence on random programs, and the
//! second-order adjoint check.
//!
//! All residuals are normalized as `max_i |got_i − want_i| / max(‖want‖, 1)`
//! so that near-zero reference entries do not inflate an honest
//! roundoff-level disagreement into a failure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adjoint::{solve_adjoint, solve_second_order_adjoint};
use crate::blas::{dot, gemm};
use crate::dense::{DenseMatrix, DenseVector};
use crate::error::Result;
use crate::lu::LuFactorization;
use crate::tangent::{
    dot_tangent, gemm_tangent, gemv_tangent, sandwich_tangent, solve_tangent,
};
use crate::tape::{Activity, Tape, Value};
use crate::verify::draws::{random_matrix, random_vector, well_conditioned_matrix};
use crate::verify::fd::fd_directional;
use crate::verify::programs::random_program;
use crate::verify::scalar_oracle::scalar_oracle_adjoint;
use crate::verify::{max_rel_diff, VerificationReport, FD_MAX_DIM, FD_STEP};

/// Tangent rules subject to the finite-difference cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum FdRule {
    Dot,
    Gemv,
    Gemm,
    Sandwich,
    Solve,
}

impl FdRule {
    pub(crate) fn check_name(self) -> &'static str {
        match self {
            Self::Dot => "fd-dot",
            Self::Gemv => "fd-gemv",
            Self::Gemm => "fd-gemm",
            Self::Sandwich => "fd-sandwich",
            Self::Solve => "fd-solve",
        }
    }
}

fn fd_worst(fd: &[f64], analytic: &[f64]) -> f64 {
    let scale = analytic.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    fd.iter()
        .zip(analytic)
        .map(|(f, a)| (f - a).abs() / scale)
        .fold(0.0, f64::max)
}

/// Compares one tangent rule with central differences over `trials` seeded
/// draws at dimensions up to `max_dim`.
pub(crate) fn fd_check(
    rule: FdRule,
    max_dim: usize,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    let max_dim = max_dim.clamp(1, FD_MAX_DIM);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        worst = worst.max(fd_trial(rule, max_dim, &mut rng)?);
    }
    Ok(VerificationReport {
        check_name: rule.check_name().to_string(),
        residual: worst,
        tolerance: tol,
        passed: worst <= tol,
        trials: trials as u64,
        seed,
    })
}

fn fd_trial(rule: FdRule, max_dim: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let dim = |rng: &mut ChaCha8Rng| rng.random_range(1..=max_dim);
    match rule {
        FdRule::Dot => {
            let n = dim(rng);
            let (a, x) = (random_vector(rng, n), random_vector(rng, n));
            let (a_t, x_t) = (random_vector(rng, n), random_vector(rng, n));
            let point: Vec<f64> =
                a.as_slice().iter().chain(x.as_slice()).copied().collect();
            let dir: Vec<f64> =
                a_t.as_slice().iter().chain(x_t.as_slice()).copied().collect();
            let fd = fd_directional(
                |p| {
                    let av = DenseVector::from_slice(&p[..n])?;
                    let xv = DenseVector::from_slice(&p[n..])?;
                    Ok(vec![dot(&av, &xv)?])
                },
                &point,
                &dir,
                FD_STEP,
            )?;
            let analytic = dot_tangent(&a, &x, &a_t, &x_t)?;
            Ok(fd_worst(&fd, &[analytic]))
        }
        FdRule::Gemv => {
            let (m, n) = (dim(rng), dim(rng));
            let a = random_matrix(rng, m, n);
            let x = random_vector(rng, n);
            let a_t = random_matrix(rng, m, n);
            let x_t = random_vector(rng, n);
            let point: Vec<f64> =
                a.as_slice().iter().chain(x.as_slice()).copied().collect();
            let dir: Vec<f64> =
                a_t.as_slice().iter().chain(x_t.as_slice()).copied().collect();
            let fd = fd_directional(
                |p| {
                    let am = DenseMatrix::from_col_major(m, n, &p[..m * n])?;
                    let xv = DenseVector::from_slice(&p[m * n..])?;
                    Ok(crate::blas::gemv(&am, &xv)?.as_slice().to_vec())
                },
                &point,
                &dir,
                FD_STEP,
            )?;
            let analytic = gemv_tangent(&a, &x, &a_t, &x_t)?;
            Ok(fd_worst(&fd, analytic.as_slice()))
        }
        FdRule::Gemm => {
            let (m, n, p) = (dim(rng), dim(rng), dim(rng));
            let a = random_matrix(rng, m, n);
            let x = random_matrix(rng, n, p);
            let a_t = random_matrix(rng, m, n);
            let x_t = random_matrix(rng, n, p);
            let point: Vec<f64> =
                a.as_slice().iter().chain(x.as_slice()).copied().collect();
            let dir: Vec<f64> =
                a_t.as_slice().iter().chain(x_t.as_slice()).copied().collect();
            let fd = fd_directional(
                |q| {
                    let am = DenseMatrix::from_col_major(m, n, &q[..m * n])?;
                    let xm = DenseMatrix::from_col_major(n, p, &q[m * n..])?;
                    Ok(gemm(&am, &xm)?.as_slice().to_vec())
                },
                &point,
                &dir,
                FD_STEP,
            )?;
            let analytic = gemm_tangent(&a, &x, &a_t, &x_t)?;
            Ok(fd_worst(&fd, analytic.as_slice()))
        }
        FdRule::Sandwich => {
            let (m, n, p, q) = (dim(rng), dim(rng), dim(rng), dim(rng));
            let a = random_matrix(rng, m, n);
            let b = random_matrix(rng, p, q);
            let x = random_matrix(rng, n, p);
            let x_t = random_matrix(rng, n, p);
            let fd = fd_directional(
                |e| {
                    let xm = DenseMatrix::from_col_major(n, p, e)?;
                    Ok(gemm(&gemm(&a, &xm)?, &b)?.as_slice().to_vec())
                },
                x.as_slice(),
                x_t.as_slice(),
                FD_STEP,
            )?;
            let analytic = sandwich_tangent(&a, &x_t, &b)?;
            Ok(fd_worst(&fd, analytic.as_slice()))
        }
        FdRule::Solve => {
            let n = dim(rng);
            let a = well_conditioned_matrix(rng, n);
            let b = random_vector(rng, n);
            let a_t = random_matrix(rng, n, n);
            let b_t = random_vector(rng, n);
            let point: Vec<f64> =
                a.as_slice().iter().chain(b.as_slice()).copied().collect();
            let dir: Vec<f64> =
                a_t.as_slice().iter().chain(b_t.as_slice()).copied().collect();
            let fd = fd_directional(
                |p| {
                    let am = DenseMatrix::from_col_major(n, n, &p[..n * n])?;
                    let bv = DenseVector::from_slice(&p[n * n..])?;
                    Ok(LuFactorization::factor(&am)?.solve(&bv)?.as_slice().to_vec())
                },
                &point,
                &dir,
                FD_STEP,
            )?;
            let f = LuFactorization::factor(&a)?;
            let x = f.solve(&b)?;
            let analytic = solve_tangent(&f, &x, &a_t, &b_t)?;
            Ok(fd_worst(&fd, analytic.as_slice()))
        }
    }
}

/// Entrywise finite-difference check of the solve adjoint: the gradient of
/// `g(A, b) = <x_adj, solve(A, b)>` with respect to every entry of A and b
/// must match `(A_adj, b_adj)` from the rule.
pub(crate) fn solve_adjoint_fd_check(
    n: usize,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let a = well_conditioned_matrix(&mut rng, n);
        let b = random_vector(&mut rng, n);
        let x_adj = random_vector(&mut rng, n);

        let f = LuFactorization::factor(&a)?;
        let x = f.solve(&b)?;
        let (b_adj, a_adj) = solve_adjoint(&f, &x, &x_adj)?;
        let analytic: Vec<f64> =
            a_adj.as_slice().iter().chain(b_adj.as_slice()).copied().collect();

        let point: Vec<f64> =
            a.as_slice().iter().chain(b.as_slice()).copied().collect();
        let g = |p: &[f64]| -> Result<Vec<f64>> {
            let am = DenseMatrix::from_col_major(n, n, &p[..n * n])?;
            let bv = DenseVector::from_slice(&p[n * n..])?;
            let xv = LuFactorization::factor(&am)?.solve(&bv)?;
            Ok(vec![dot(&x_adj, &xv)?])
        };
        for k in 0..point.len() {
            let mut dir = vec![0.0; point.len()];
            dir[k] = 1.0;
            let fd = fd_directional(g, &point, &dir, FD_STEP)?[0];
            let err = (fd - analytic[k]).abs() / analytic[k].abs().max(1.0);
            worst = worst.max(err);
        }
    }
    Ok(VerificationReport {
        check_name: "solve-adjoint-fd".to_string(),
        residual: worst,
        tolerance: tol,
        passed: worst <= tol,
        trials: trials as u64,
        seed,
    })
}

/// Cross-checks the solve adjoint rule against the scalar-level oracle on
/// single-solve programs.
pub(crate) fn solve_adjoint_oracle_check(
    n: usize,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let a = well_conditioned_matrix(&mut rng, n);
        let b = random_vector(&mut rng, n);
        let x_adj = random_vector(&mut rng, n);

        let f = LuFactorization::factor(&a)?;
        let x = f.solve(&b)?;
        let (b_adj, a_adj) = solve_adjoint(&f, &x, &x_adj)?;

        let mut t = Tape::new();
        let ah = t.record_input(a.clone().into(), Activity::Active)?;
        let bh = t.record_input(b.clone().into(), Activity::Active)?;
        let xh = t.record_op(crate::tape::OpKind::Solve, &[ah, bh])?;
        let store = scalar_oracle_adjoint(&t, xh, Value::Vector(x_adj.clone()))?;

        worst = worst
            .max(max_rel_diff(store.adjoint_of(bh)?, &Value::Vector(b_adj))?)
            .max(max_rel_diff(store.adjoint_of(ah)?, &Value::Matrix(a_adj))?);
    }
    Ok(VerificationReport {
        check_name: "solve-adjoint-oracle".to_string(),
        residual: worst,
        tolerance: tol,
        passed: worst <= tol,
        trials: trials as u64,
        seed,
    })
}

/// Tape reverse versus the scalar oracle on random straight-line programs.
/// Solve nodes are forced into every other program and fan-out into every
/// third, so any user seed exercises both.
pub(crate) fn tape_oracle_check(
    programs: usize,
    max_depth: usize,
    max_dim: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..programs {
        let p = random_program(&mut rng, max_depth, max_dim, i % 2 == 0, i % 3 == 0)?;
        let tape_store = p.tape.reverse(p.output, Value::Scalar(1.0))?;
        let oracle_store = scalar_oracle_adjoint(&p.tape, p.output, Value::Scalar(1.0))?;
        for h in &p.inputs {
            if !h.is_active() {
                continue;
            }
            let got = oracle_store.adjoint_of(*h)?;
            let want = tape_store.adjoint_of(*h)?;
            worst = worst.max(max_rel_diff(got, want)?);
        }
    }
    Ok(VerificationReport {
        check_name: "tape-oracle".to_string(),
        residual: worst,
        tolerance: tol,
        passed: worst <= tol,
        trials: programs as u64,
        seed,
    })
}

/// Central-difference check of the second-order solve adjoint: the
/// directional derivative of `solve_adjoint`'s outputs along a random
/// `(A_dot, b_dot, x_adj_dot)` must match `solve_second_order_adjoint`.
pub(crate) fn second_order_check(
    n: usize,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let a = well_conditioned_matrix(&mut rng, n);
        let b = random_vector(&mut rng, n);
        let x_adj = random_vector(&mut rng, n);
        let a_dot = random_matrix(&mut rng, n, n);
        let b_dot = random_vector(&mut rng, n);
        let x_adj_dot = random_vector(&mut rng, n);

        let f = LuFactorization::factor(&a)?;
        let x = f.solve(&b)?;
        let (b_adj_dot, a_adj_dot) =
            solve_second_order_adjoint(&f, &x, &x_adj, &a_dot, &b_dot, &x_adj_dot)?;
        let analytic: Vec<f64> = b_adj_dot
            .as_slice()
            .iter()
            .chain(a_adj_dot.as_slice())
            .copied()
            .collect();

        let point: Vec<f64> = a
            .as_slice()
            .iter()
            .chain(b.as_slice())
            .chain(x_adj.as_slice())
            .copied()
            .collect();
        let dir: Vec<f64> = a_dot
            .as_slice()
            .iter()
            .chain(b_dot.as_slice())
            .chain(x_adj_dot.as_slice())
            .copied()
            .collect();
        let fd = fd_directional(
            |p| {
                let am = DenseMatrix::from_col_major(n, n, &p[..n * n])?;
                let bv = DenseVector::from_slice(&p[n * n..n * n + n])?;
                let sv = DenseVector::from_slice(&p[n * n + n..])?;
                let fp = LuFactorization::factor(&am)?;
                let xp = fp.solve(&bv)?;
                let (b_adj, a_adj) = solve_adjoint(&fp, &xp, &sv)?;
                Ok(b_adj.as_slice().iter().chain(a_adj.as_slice()).copied().collect())
            },
            &point,
            &dir,
            FD_STEP,
        )?;
        worst = worst.max(fd_worst(&fd, &analytic));
    }
    Ok(VerificationReport {
        check_name: "second-order".to_string(),
        residual: worst,
        tolerance: tol,
        passed: worst <= tol,
        trials: trials as u64,
        seed,
    })
}

//! Verification oracles for every derivative rule in the crate.
//!
//! Three independent lines of evidence back each rule:
//!
//! 1. **The inner-product identity.** For any operation with tangent
//!    `y_tan = F'·x_tan` and adjoint `x_adj = F'ᵀ·y_adj`, the scalars
//!    `<y_tan, y_adj>` and `<x_tan, x_adj>` are equal. Tangent and adjoint
//!    code are written from separate derivations, so agreement to roundoff
//!    is strong evidence both are right. See [`check_identity`].
//! 2. **Central finite differences.** Directional derivatives of the
//!    primal operations, including the solve (re-factoring the perturbed
//!    matrix), compared against the tangent rules, and entrywise gradients
//!    of `<x_adj, solve(A,b)>` compared against the solve adjoint.
//! 3. **A scalar-level oracle.** [`scalar_oracle_adjoint`] re-differentiates
//!    a recorded tape one multiply-add at a time, using its own substitution
//!    loops for the solve, and must agree with the matrix-granularity
//!    reverse sweep on random programs.
//!
//! [`run_suite`] bundles all sixteen checks behind stable kebab-case names
//! and returns one [`VerificationReport`] per check. Every check is
//! deterministic in its seed: the same `(name, seed, trials)` triple always
//! reproduces the same residual bit for bit.

pub mod draws;
pub mod fd;
pub mod identity;
pub mod programs;
pub mod scalar_oracle;

mod checks;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tape::Value;

pub use fd::fd_directional;
pub use identity::{check_identity, RulePair};
pub use programs::{random_program, GeneratedProgram};
pub use scalar_oracle::scalar_oracle_adjoint;

/// Tolerance for inner-product identities over multiply-type rules
/// (dot, gemv, gemm, sandwich variants): pure products at unit scale agree
/// to a small multiple of machine epsilon.
pub const IDENTITY_TOL_MULTIPLY: f64 = 1e-12;

/// Tolerance for inner-product identities involving a solve, which runs
/// two substitution passes and loosens the roundoff bound.
pub const IDENTITY_TOL_SOLVE: f64 = 1e-10;

/// Largest dimension drawn by the identity checks.
pub const IDENTITY_MAX_DIM: usize = 16;

/// Tolerance for central-difference agreement. Central differences at step
/// `h` carry an O(h²) truncation error, so with [`FD_STEP`] = 1e-5 the
/// achievable agreement is about 1e-10 at unit scale; 1e-6 leaves headroom
/// for unlucky draws.
pub const FD_TOL: f64 = 1e-6;

/// Step size for central differences.
pub const FD_STEP: f64 = 1e-5;

/// Largest dimension drawn by the finite-difference checks.
pub const FD_MAX_DIM: usize = 16;

/// Tolerance for the entrywise finite-difference check of the solve
/// adjoint. Each entry's reference value comes from two re-factored solves,
/// so cancellation is worse than in the directional checks.
pub const SOLVE_ADJOINT_FD_TOL: f64 = 1e-5;

/// System size for the solve-adjoint checks.
pub const SOLVE_ADJOINT_DIM: usize = 8;

/// Trials for the solve-adjoint checks.
pub const SOLVE_ADJOINT_TRIALS: usize = 20;

/// Tolerance for agreement between analytic rules (or the tape) and the
/// scalar-level oracle. Both sides are exact derivatives evaluated in
/// different association orders, so they agree to accumulated roundoff.
pub const ORACLE_TOL: f64 = 1e-9;

/// Number of random programs in the tape-versus-oracle check.
pub const TAPE_ORACLE_PROGRAMS: usize = 25;

/// Operation count per random program.
pub const TAPE_ORACLE_MAX_DEPTH: usize = 6;

/// Largest dimension drawn inside random programs.
pub const TAPE_ORACLE_MAX_DIM: usize = 8;

/// Tolerance for the second-order adjoint versus central differences of
/// the first-order adjoint.
pub const SECOND_ORDER_TOL: f64 = 1e-5;

/// System size for the second-order check.
pub const SECOND_ORDER_DIM: usize = 6;

/// Trials for the second-order check.
pub const SECOND_ORDER_TRIALS: usize = 10;

/// Default trials for identity and finite-difference checks.
pub const DEFAULT_TRIALS: usize = 50;

/// Default seed when neither the command line nor `ADJBLAS_SEED` names one.
pub const DEFAULT_SEED: u64 = 42;

/// Relative disagreement between two scalars that ought to be equal,
/// normalized by `max(|lhs|, |rhs|, 1)` so values near zero are compared
/// absolutely instead of dividing by noise.
pub fn relative_residual(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
}

fn value_entries(v: &Value) -> &[f64] {
    match v {
        Value::Scalar(s) => std::slice::from_ref(s),
        Value::Vector(x) => x.as_slice(),
        Value::Matrix(a) => a.as_slice(),
    }
}

/// Worst entrywise disagreement between two values of equal shape,
/// normalized by `max(‖want‖_max, 1)`.
pub fn max_rel_diff(got: &Value, want: &Value) -> Result<f64> {
    if got.shape() != want.shape() {
        return Err(Error::dim(
            "max_rel_diff",
            format!("{} vs {}", got.shape(), want.shape()),
        ));
    }
    let (g, w) = (value_entries(got), value_entries(want));
    if g.iter().chain(w).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "adjoint comparison".to_string() });
    }
    let scale = w.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    Ok(g.iter()
        .zip(w)
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max))
}

/// Outcome of a single verification check.
///
/// Reports are reproducible: rerunning the same check with the same `seed`
/// and `trials` yields a bitwise-identical `residual`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Stable kebab-case check name, e.g. `"gemm"` or `"solve-adjoint-fd"`.
    pub check_name: String,
    /// Worst relative disagreement observed across all trials.
    pub residual: f64,
    /// Threshold the residual was compared against.
    pub tolerance: f64,
    /// `residual <= tolerance`.
    pub passed: bool,
    /// Number of random trials (or generated programs) aggregated.
    pub trials: u64,
    /// Seed that reproduces this exact report.
    pub seed: u64,
}

/// One of the sixteen named verification checks.
///
/// The seven identity checks carry the bare rule name (`"mul"`, `"dot"`,
/// `"gemv"`, `"gemm"`, `"sandwich"`, `"sum-sandwich"`, `"solve"`); the
/// finite-difference checks prefix theirs with `fd-`; the remaining four
/// are `"solve-adjoint-fd"`, `"solve-adjoint-oracle"`, `"tape-oracle"`,
/// and `"second-order"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Check {
    /// Inner-product identity for scalar multiplication.
    Mul,
    /// Inner-product identity for the dot product.
    Dot,
    /// Inner-product identity for matrix-vector product.
    Gemv,
    /// Inner-product identity for matrix-matrix product.
    Gemm,
    /// Inner-product identity for the sandwich product `A·X·B`.
    Sandwich,
    /// Inner-product identity for a sum of sandwich products.
    SumSandwich,
    /// Inner-product identity for the linear solve.
    Solve,
    /// Finite differences versus the dot tangent.
    FdDot,
    /// Finite differences versus the gemv tangent.
    FdGemv,
    /// Finite differences versus the gemm tangent.
    FdGemm,
    /// Finite differences versus the sandwich tangent.
    FdSandwich,
    /// Finite differences versus the solve tangent (re-factoring the
    /// perturbed matrix).
    FdSolve,
    /// Entrywise finite-difference gradient of `<x_adj, solve(A,b)>`
    /// versus the solve adjoint rule.
    SolveAdjointFd,
    /// Solve adjoint rule versus the scalar-level oracle.
    SolveAdjointOracle,
    /// Tape reverse sweep versus the scalar-level oracle on random
    /// programs with fan-out and embedded solves.
    TapeOracle,
    /// Second-order solve adjoint versus central differences of the
    /// first-order adjoint.
    SecondOrder,
}

impl Check {
    /// Every check, in suite order.
    pub const ALL: [Check; 16] = [
        Check::Mul,
        Check::Dot,
        Check::Gemv,
        Check::Gemm,
        Check::Sandwich,
        Check::SumSandwich,
        Check::Solve,
        Check::FdDot,
        Check::FdGemv,
        Check::FdGemm,
        Check::FdSandwich,
        Check::FdSolve,
        Check::SolveAdjointFd,
        Check::SolveAdjointOracle,
        Check::TapeOracle,
        Check::SecondOrder,
    ];

    /// The stable name used in reports and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Check::Mul => "mul",
            Check::Dot => "dot",
            Check::Gemv => "gemv",
            Check::Gemm => "gemm",
            Check::Sandwich => "sandwich",
            Check::SumSandwich => "sum-sandwich",
            Check::Solve => "solve",
            Check::FdDot => "fd-dot",
            Check::FdGemv => "fd-gemv",
            Check::FdGemm => "fd-gemm",
            Check::FdSandwich => "fd-sandwich",
            Check::FdSolve => "fd-solve",
            Check::SolveAdjointFd => "solve-adjoint-fd",
            Check::SolveAdjointOracle => "solve-adjoint-oracle",
            Check::TapeOracle => "tape-oracle",
            Check::SecondOrder => "second-order",
        }
    }

    fn identity_pair(self) -> Option<RulePair> {
        match self {
            Check::Mul => Some(RulePair::Mul),
            Check::Dot => Some(RulePair::Dot),
            Check::Gemv => Some(RulePair::Gemv),
            Check::Gemm => Some(RulePair::Gemm),
            Check::Sandwich => Some(RulePair::Sandwich),
            Check::SumSandwich => Some(RulePair::SumSandwich),
            Check::Solve => Some(RulePair::Solve),
            _ => None,
        }
    }

    fn fd_rule(self) -> Option<checks::FdRule> {
        match self {
            Check::FdDot => Some(checks::FdRule::Dot),
            Check::FdGemv => Some(checks::FdRule::Gemv),
            Check::FdGemm => Some(checks::FdRule::Gemm),
            Check::FdSandwich => Some(checks::FdRule::Sandwich),
            Check::FdSolve => Some(checks::FdRule::Solve),
            _ => None,
        }
    }

    /// The tolerance this check runs at when none is supplied.
    pub fn default_tolerance(self) -> f64 {
        if let Some(pair) = self.identity_pair() {
            return if pair.is_solve_type() {
                IDENTITY_TOL_SOLVE
            } else {
                IDENTITY_TOL_MULTIPLY
            };
        }
        match self {
            Check::FdDot
            | Check::FdGemv
            | Check::FdGemm
            | Check::FdSandwich
            | Check::FdSolve => FD_TOL,
            Check::SolveAdjointFd => SOLVE_ADJOINT_FD_TOL,
            Check::SolveAdjointOracle | Check::TapeOracle => ORACLE_TOL,
            Check::SecondOrder => SECOND_ORDER_TOL,
            _ => unreachable!("identity checks handled above"),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownCheck { name: s.to_string() })
    }
}

/// Configuration for [`run_suite`].
///
/// `None` fields fall back to each check's own default (dimension, trial
/// count, tolerance); setting them overrides every selected check at once,
/// which is mostly useful for smoke tests (`max_dim: Some(1)` runs the
/// entire suite on 1×1 systems).
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    /// Checks to run, in order. Must be non-empty.
    pub checks: Vec<Check>,
    /// Seed recorded in, and reproducing, every report.
    pub seed: u64,
    /// Trial-count override.
    pub trials: Option<usize>,
    /// Dimension override.
    pub max_dim: Option<usize>,
    /// Tolerance override.
    pub tol: Option<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            checks: Check::ALL.to_vec(),
            seed: DEFAULT_SEED,
            trials: None,
            max_dim: None,
            tol: None,
        }
    }
}

/// Runs the configured checks and returns one report per check, in order.
///
/// Every check receives `config.seed` directly, so a report can be
/// reproduced from its own fields alone. Errors are reserved for invalid
/// configuration or numerical breakdown (a singular draw); an honest
/// derivative disagreement is reported via `passed: false`, not an error.
pub fn run_suite(config: &SuiteConfig) -> Result<Vec<VerificationReport>> {
    if config.checks.is_empty() {
        return Err(Error::InvalidArgument { what: "empty check set".to_string() });
    }
    let mut reports = Vec::with_capacity(config.checks.len());
    for &check in &config.checks {
        let tol = config.tol.unwrap_or_else(|| check.default_tolerance());
        let seed = config.seed;
        let report = if let Some(pair) = check.identity_pair() {
            check_identity(
                pair,
                config.max_dim.unwrap_or(IDENTITY_MAX_DIM),
                config.trials.unwrap_or(DEFAULT_TRIALS),
                seed,
                tol,
            )?
        } else if let Some(rule) = check.fd_rule() {
            checks::fd_check(
                rule,
                config.max_dim.unwrap_or(FD_MAX_DIM),
                config.trials.unwrap_or(DEFAULT_TRIALS),
                seed,
                tol,
            )?
        } else {
            match check {
                Check::SolveAdjointFd => checks::solve_adjoint_fd_check(
                    config.max_dim.unwrap_or(SOLVE_ADJOINT_DIM),
                    config.trials.unwrap_or(SOLVE_ADJOINT_TRIALS),
                    seed,
                    tol,
                )?,
                Check::SolveAdjointOracle => checks::solve_adjoint_oracle_check(
                    config.max_dim.unwrap_or(SOLVE_ADJOINT_DIM),
                    config.trials.unwrap_or(SOLVE_ADJOINT_TRIALS),
                    seed,
                    tol,
                )?,
                Check::TapeOracle => checks::tape_oracle_check(
                    config.trials.unwrap_or(TAPE_ORACLE_PROGRAMS),
                    TAPE_ORACLE_MAX_DEPTH,
                    config.max_dim.unwrap_or(TAPE_ORACLE_MAX_DIM),
                    seed,
                    tol,
                )?,
                Check::SecondOrder => checks::second_order_check(
                    config.max_dim.unwrap_or(SECOND_ORDER_DIM),
                    config.trials.unwrap_or(SECOND_ORDER_TRIALS),
                    seed,
                    tol,
                )?,
                _ => unreachable!("identity and fd checks handled above"),
            }
        };
        debug_assert_eq!(report.check_name, check.name());
        reports.push(report);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_all_pass() {
        let reports = run_suite(&SuiteConfig::default()).unwrap();
        assert_eq!(reports.len(), 16);
        for r in &reports {
            assert!(r.passed, "{} failed with residual {}", r.check_name, r.residual);
            assert!(r.residual.is_finite());
            assert_eq!(r.seed, DEFAULT_SEED);
        }
        let names: Vec<&str> = reports.iter().map(|r| r.check_name.as_str()).collect();
        assert_eq!(
            names,
            [
                "mul",
                "dot",
                "gemv",
                "gemm",
                "sandwich",
                "sum-sandwich",
                "solve",
                "fd-dot",
                "fd-gemv",
                "fd-gemm",
                "fd-sandwich",
                "fd-solve",
                "solve-adjoint-fd",
                "solve-adjoint-oracle",
                "tape-oracle",
                "second-order"
            ]
        );
    }

    #[test]
    fn suite_is_bitwise_deterministic() {
        let config = SuiteConfig { seed: 7, ..SuiteConfig::default() };
        let a = run_suite(&config).unwrap();
        let b = run_suite(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_one_smoke_suite_passes() {
        let config = SuiteConfig { max_dim: Some(1), ..SuiteConfig::default() };
        for r in run_suite(&config).unwrap() {
            assert!(r.passed, "{} failed at n=1: {}", r.check_name, r.residual);
        }
    }

    #[test]
    fn empty_check_set_rejected() {
        let config = SuiteConfig { checks: vec![], ..SuiteConfig::default() };
        let err = run_suite(&config).unwrap_err();
        assert_eq!(err.to_string(), "invalid argument: empty check set");
    }

    #[test]
    fn check_names_round_trip() {
        for check in Check::ALL {
            assert_eq!(check.name().parse::<Check>().unwrap(), check);
        }
        let err = "bogus".parse::<Check>().unwrap_err();
        assert_eq!(err.to_string(), "unknown check: bogus");
        // `solve` resolves to the identity check of that name.
        assert_eq!("solve".parse::<Check>().unwrap(), Check::Solve);
    }

    #[test]
    fn relative_residual_normalizes() {
        assert_eq!(relative_residual(2.0, 2.0), 0.0);
        assert_eq!(relative_residual(0.0, 1e-3), 1e-3); // floor denominator
        assert_eq!(relative_residual(4.0, 2.0), 0.5);
    }

    #[test]
    fn max_rel_diff_rejects_shape_mismatch() {
        let a = Value::Scalar(1.0);
        let b = Value::Vector(crate::dense::DenseVector::from_slice(&[1.0]).unwrap());
        assert!(max_rel_diff(&a, &b).is_err());
    }

    #[test]
    fn report_serializes_and_parses() {
        let r = VerificationReport {
            check_name: "gemm".to_string(),
            residual: 3.5e-16,
            tolerance: 1e-12,
            passed: true,
            trials: 50,
            seed: 42,
        };
        let json = serde_json::to_string(&r).unwrap();
        let back: VerificationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}

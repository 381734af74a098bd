//! The tangent/adjoint inner-product identity.
//!
//! For a differentiable map with tangent rule `y_tan = F'·x_tan` and
//! adjoint rule `x_adj = F'^T·y_adj`, the defining equation of the adjoint
//! operator is
//!
//! ```text
//! <F'·x_tan, y_adj> = <x_tan, F'^T·y_adj>
//! ```
//!
//! for every tangent direction and adjoint seed. The two sides are computed
//! by entirely different code paths (the forward rule and the reverse
//! rule), so agreement to roundoff is a sharp test: any dropped term,
//! missing transpose, or sign error breaks it by O(1).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adjoint::{
    dot_adjoint, gemm_adjoint, gemv_adjoint, mul_adjoint, sandwich_adjoint,
    solve_adjoint, sum_sandwich_adjoint, SandwichTerm,
};
use crate::blas::dot;
use crate::error::{Error, Result};
use crate::lu::LuFactorization;
use crate::tangent::{
    dot_tangent, gemm_tangent, gemv_tangent, sandwich_tangent, solve_tangent,
};
use crate::verify::draws::{random_matrix, random_vector, well_conditioned_matrix};
use crate::verify::{relative_residual, VerificationReport};

/// A named tangent/adjoint rule pair subject to the identity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RulePair {
    Mul,
    Dot,
    Gemv,
    Gemm,
    Sandwich,
    /// Sum of three sandwich products sharing one output adjoint.
    SumSandwich,
    Solve,
}

impl RulePair {
    pub const ALL: [RulePair; 7] = [
        Self::Mul,
        Self::Dot,
        Self::Gemv,
        Self::Gemm,
        Self::Sandwich,
        Self::SumSandwich,
        Self::Solve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mul => "mul",
            Self::Dot => "dot",
            Self::Gemv => "gemv",
            Self::Gemm => "gemm",
            Self::Sandwich => "sandwich",
            Self::SumSandwich => "sum-sandwich",
            Self::Solve => "solve",
        }
    }

    /// Solve-type rules tolerate more roundoff than pure products because
    /// substitution residuals grow with conditioning.
    pub fn is_solve_type(self) -> bool {
        matches!(self, Self::Solve)
    }
}

impl fmt::Display for RulePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RulePair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument { what: format!("unknown rule pair: {s}") })
    }
}

/// Runs `trials` seeded random draws of the identity for one rule pair and
/// reports the worst relative residual `|lhs−rhs| / max(|lhs|,|rhs|,1)`.
///
/// Dimensions are drawn from `1..=max_dim` per trial; solve draws are
/// well-conditioned by construction.
pub fn check_identity(
    pair: RulePair,
    max_dim: usize,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument { what: "identity check needs trials >= 1".into() });
    }
    if max_dim == 0 {
        return Err(Error::InvalidArgument { what: "identity check needs max_dim >= 1".into() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let (lhs, rhs) = identity_trial(pair, max_dim, &mut rng)?;
        worst = worst.max(relative_residual(lhs, rhs));
    }
    Ok(VerificationReport {
        check_name: pair.name().to_string(),
        residual: worst,
        tolerance: tol,
        passed: worst <= tol,
        trials: trials as u64,
        seed,
    })
}

/// One draw of the identity: returns `(<tangent_out, seed>, <tangents, adjoints>)`.
fn identity_trial(
    pair: RulePair,
    max_dim: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64)> {
    let dim = |rng: &mut ChaCha8Rng| rng.random_range(1..=max_dim);
    match pair {
        RulePair::Mul => {
            let s = |rng: &mut ChaCha8Rng| rng.random_range(-1.0..=1.0);
            let (a, x, a_tan, x_tan, y_adj) =
                (s(rng), s(rng), s(rng), s(rng), s(rng));
            let y_tan = a_tan * x + a * x_tan;
            let (a_adj, x_adj) = mul_adjoint(a, x, y_adj);
            Ok((y_tan * y_adj, a_tan * a_adj + x_tan * x_adj))
        }
        RulePair::Dot => {
            let n = dim(rng);
            let (a, x) = (random_vector(rng, n), random_vector(rng, n));
            let (a_tan, x_tan) = (random_vector(rng, n), random_vector(rng, n));
            let y_adj = rng.random_range(-1.0..=1.0);
            let y_tan = dot_tangent(&a, &x, &a_tan, &x_tan)?;
            let (a_adj, x_adj) = dot_adjoint(&a, &x, y_adj)?;
            Ok((y_tan * y_adj, dot(&a_tan, &a_adj)? + dot(&x_tan, &x_adj)?))
        }
        RulePair::Gemv => {
            let (m, n) = (dim(rng), dim(rng));
            let a = random_matrix(rng, m, n);
            let x = random_vector(rng, n);
            let a_tan = random_matrix(rng, m, n);
            let x_tan = random_vector(rng, n);
            let y_adj = random_vector(rng, m);
            let y_tan = gemv_tangent(&a, &x, &a_tan, &x_tan)?;
            let (a_adj, x_adj) = gemv_adjoint(&a, &x, &y_adj)?;
            Ok((dot(&y_tan, &y_adj)?, a_tan.frobenius_dot(&a_adj)? + dot(&x_tan, &x_adj)?))
        }
        RulePair::Gemm => {
            let (m, n, p) = (dim(rng), dim(rng), dim(rng));
            let a = random_matrix(rng, m, n);
            let x = random_matrix(rng, n, p);
            let a_tan = random_matrix(rng, m, n);
            let x_tan = random_matrix(rng, n, p);
            let y_adj = random_matrix(rng, m, p);
            let y_tan = gemm_tangent(&a, &x, &a_tan, &x_tan)?;
            let (a_adj, x_adj) = gemm_adjoint(&a, &x, &y_adj)?;
            Ok((
                y_tan.frobenius_dot(&y_adj)?,
                a_tan.frobenius_dot(&a_adj)? + x_tan.frobenius_dot(&x_adj)?,
            ))
        }
        RulePair::Sandwich => {
            let (m, n, p, q) = (dim(rng), dim(rng), dim(rng), dim(rng));
            let a = random_matrix(rng, m, n);
            let b = random_matrix(rng, p, q);
            let x_tan = random_matrix(rng, n, p);
            let y_adj = random_matrix(rng, m, q);
            let y_tan = sandwich_tangent(&a, &x_tan, &b)?;
            let x_adj = sandwich_adjoint(&a, &b, &y_adj)?;
            Ok((y_tan.frobenius_dot(&y_adj)?, x_tan.frobenius_dot(&x_adj)?))
        }
        RulePair::SumSandwich => {
            let (m, q) = (dim(rng), dim(rng));
            let y_adj = random_matrix(rng, m, q);
            let mut terms = Vec::new();
            let mut tangents = Vec::new();
            let mut y_tan = crate::dense::DenseMatrix::zeros(m, q);
            for _ in 0..3 {
                let (n, p) = (dim(rng), dim(rng));
                let a = random_matrix(rng, m, n);
                let b = random_matrix(rng, p, q);
                let x_tan = random_matrix(rng, n, p);
                y_tan = y_tan.add(&sandwich_tangent(&a, &x_tan, &b)?)?;
                terms.push(SandwichTerm::new(a, b));
                tangents.push(x_tan);
            }
            let adjoints = sum_sandwich_adjoint(&terms, &y_adj)?;
            let mut rhs = 0.0;
            for (x_tan, x_adj) in tangents.iter().zip(&adjoints) {
                rhs += x_tan.frobenius_dot(x_adj)?;
            }
            Ok((y_tan.frobenius_dot(&y_adj)?, rhs))
        }
        RulePair::Solve => {
            let n = dim(rng);
            let a = well_conditioned_matrix(rng, n);
            let b = random_vector(rng, n);
            let f = LuFactorization::factor(&a)?;
            let x = f.solve(&b)?;
            let a_tan = random_matrix(rng, n, n);
            let b_tan = random_vector(rng, n);
            let x_adj = random_vector(rng, n);
            let x_tan = solve_tangent(&f, &x, &a_tan, &b_tan)?;
            let (b_adj, a_adj) = solve_adjoint(&f, &x, &x_adj)?;
            Ok((
                dot(&x_tan, &x_adj)?,
                dot(&b_tan, &b_adj)? + a_tan.frobenius_dot(&a_adj)?,
            ))
        }
    }
}

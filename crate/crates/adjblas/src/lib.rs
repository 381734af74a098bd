//! Dense linear-algebra differentiation: tangent and adjoint rules for
//! BLAS-level operations and linear-system solves.
//!
//! The elemental operations here are whole products and solves — dot,
//! gemv, gemm, sandwich products `A·X·B`, and `x = A⁻¹b` — rather than the
//! scalar arithmetic inside them. Differentiating at that granularity pays
//! off twice: the derivative rules are closed-form matrix expressions (a
//! gemm's adjoint is two gemms), and the expensive part of a solve, the LU
//! factorization, is computed once and reused by every tangent, adjoint,
//! and second-order sweep, dropping their per-call cost from O(n³) to
//! O(n²).
//!
//! The crate is organized in layers:
//!
//! - [`dense`]: column-major matrix and vector storage plus a plain text
//!   file format.
//! - [`blas`]: the primal product kernels, flop-counted via [`flops`].
//! - [`lu`]: partial-pivoting LU with plain and transposed substitution.
//! - [`tangent`] / [`adjoint`]: forward- and reverse-mode rules for every
//!   kernel, including first- and second-order adjoints of the solve.
//! - [`tape`]: a matrix-granularity reverse-mode tape composing the rules
//!   with fan-out accumulation and cached factorizations.
//! - [`verify`]: independent oracles — central finite differences, the
//!   tangent/adjoint inner-product identity, and a scalar-level AD oracle
//!   that differentiates the unrolled loops of every operation.
//! - [`cli`]: the `adjblas` binary's verify / bench / demo drivers.
//!
//! Every derivative rule is verified three independent ways; see the
//! `verification` example or run `adjblas verify --all`.

pub mod adjoint;
pub mod blas;
pub mod cli;
pub mod dense;
pub mod error;
pub mod flops;
pub mod lu;
pub mod tangent;
pub mod tape;
pub mod verify;

pub use adjoint::{
    dot_adjoint, gemm_adjoint, gemv_adjoint, mul_adjoint, sandwich_adjoint,
    solve_adjoint, solve_second_order_adjoint, sum_sandwich_adjoint, AdjointPair,
    SandwichTerm,
};
pub use blas::{dot, gemm, gemv, outer};
pub use dense::{DenseMatrix, DenseVector, HasShape, Shape};
pub use error::{Error, Result};
pub use flops::FlopCounter;
pub use lu::LuFactorization;
pub use tangent::{
    dot_tangent, gemm_tangent, gemv_tangent, sandwich_tangent, solve_tangent, TangentPair,
};
pub use tape::{Activity, AdjointStore, NodeHandle, OpKind, Tape, Value};

//! Forward-mode (tangent) rules for the product kernels and the linear solve.
//!
//! Each rule pushes one directional derivative through its elemental:
//! products obey the bilinear product rule, and the solve differentiates
//! the system `A x = b` implicitly, reusing the primal factorization so the
//! tangent system costs one pair of triangular solves instead of a fresh
//! factorization.

use crate::blas::{gemm, gemv};
use crate::dense::{DenseMatrix, DenseVector, HasShape, Shape};
use crate::error::{Error, Result};
use crate::lu::LuFactorization;

/// A primal value bundled with a shape-matched tangent.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPair<T: HasShape> {
    pub value: T,
    pub tangent: T,
}

impl<T: HasShape> TangentPair<T> {
    pub fn new(value: T, tangent: T) -> Result<Self> {
        if value.shape() != tangent.shape() {
            return Err(Error::dim(
                "tangent pair",
                format!("value {} vs tangent {}", value.shape(), tangent.shape()),
            ));
        }
        Ok(Self { value, tangent })
    }

    pub fn shape(&self) -> Shape {
        self.value.shape()
    }
}

/// Tangent of `y = <a, x>`: returns `<x, a_tan> + <a, x_tan>`.
pub fn dot_tangent(
    a: &DenseVector,
    x: &DenseVector,
    a_tan: &DenseVector,
    x_tan: &DenseVector,
) -> Result<f64> {
    if a.len() != x.len() || a.len() != a_tan.len() || x.len() != x_tan.len() {
        return Err(Error::dim(
            "dot tangent",
            format!("{}, {}, {}, {}", a.len(), x.len(), a_tan.len(), x_tan.len()),
        ));
    }
    Ok(crate::blas::dot(x, a_tan)? + crate::blas::dot(a, x_tan)?)
}

/// Tangent of `y = A x`: returns `A_tan x + A x_tan`.
pub fn gemv_tangent(
    a: &DenseMatrix,
    x: &DenseVector,
    a_tan: &DenseMatrix,
    x_tan: &DenseVector,
) -> Result<DenseVector> {
    if a_tan.rows() != a.rows() || a_tan.cols() != a.cols() {
        return Err(Error::dim(
            "gemv tangent",
            format!("{}x{} vs tangent {}x{}", a.rows(), a.cols(), a_tan.rows(), a_tan.cols()),
        ));
    }
    if x_tan.len() != x.len() {
        return Err(Error::dim(
            "gemv tangent",
            format!("vector {} vs tangent {}", x.len(), x_tan.len()),
        ));
    }
    gemv(a_tan, x)?.add(&gemv(a, x_tan)?)
}

/// Tangent of `Y = A X`: returns `A_tan X + A X_tan`.
pub fn gemm_tangent(
    a: &DenseMatrix,
    x: &DenseMatrix,
    a_tan: &DenseMatrix,
    x_tan: &DenseMatrix,
) -> Result<DenseMatrix> {
    if a_tan.rows() != a.rows() || a_tan.cols() != a.cols() {
        return Err(Error::dim(
            "gemm tangent",
            format!("{}x{} vs tangent {}x{}", a.rows(), a.cols(), a_tan.rows(), a_tan.cols()),
        ));
    }
    if x_tan.rows() != x.rows() || x_tan.cols() != x.cols() {
        return Err(Error::dim(
            "gemm tangent",
            format!("{}x{} vs tangent {}x{}", x.rows(), x.cols(), x_tan.rows(), x_tan.cols()),
        ));
    }
    gemm(a_tan, x)?.add(&gemm(a, x_tan)?)
}

/// Tangent of the sandwich product `Y = A X B` with passive outer factors:
/// returns `A X_tan B`.
pub fn sandwich_tangent(
    a: &DenseMatrix,
    x_tan: &DenseMatrix,
    b: &DenseMatrix,
) -> Result<DenseMatrix> {
    gemm(&gemm(a, x_tan)?, b)
}

/// Tangent of the solve `x = A^{-1} b` at the primal solution `x`:
/// returns the solution of `A x_tan = b_tan - A_tan x` using the existing
/// factorization. Performs no factorization.
pub fn solve_tangent(
    f: &LuFactorization,
    x: &DenseVector,
    a_tan: &DenseMatrix,
    b_tan: &DenseVector,
) -> Result<DenseVector> {
    let n = f.n();
    if x.len() != n || b_tan.len() != n || a_tan.rows() != n || a_tan.cols() != n {
        return Err(Error::dim(
            "solve tangent",
            format!(
                "system is {n}, x is {}, b_tan is {}, a_tan is {}x{}",
                x.len(),
                b_tan.len(),
                a_tan.rows(),
                a_tan.cols()
            ),
        ));
    }
    f.solve(&b_tan.sub(&gemv(a_tan, x)?)?)
}

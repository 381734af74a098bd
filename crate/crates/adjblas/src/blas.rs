//! Passive (undifferentiated) product kernels: dot, gemv, gemm, outer.
//!
//! Plain triple loops over the column-major containers. Every kernel adds
//! its closed-form flop tally to the session's multiply counter. Inner
//! accumulations run in index order, so a matrix kernel restricted to one
//! column or one row reproduces the lower-level kernel bit for bit.

use crate::dense::{DenseMatrix, DenseVector};
use crate::error::{Error, Result};
use crate::flops;

/// Inner product `sum_i a_i * x_i`.
pub fn dot(a: &DenseVector, x: &DenseVector) -> Result<f64> {
    if a.len() != x.len() {
        return Err(Error::dim("dot", format!("{} vs {}", a.len(), x.len())));
    }
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * x[i];
    }
    flops::add_multiply((2 * a.len() as u64).saturating_sub(1));
    Ok(acc)
}

/// Matrix-vector product `y_i = <row i of A, x>`.
pub fn gemv(a: &DenseMatrix, x: &DenseVector) -> Result<DenseVector> {
    if a.cols() != x.len() {
        return Err(Error::dim(
            "gemv",
            format!("{}x{} matrix vs length-{} vector", a.rows(), a.cols(), x.len()),
        ));
    }
    let mut y = DenseVector::zeros(a.rows());
    for i in 0..a.rows() {
        let mut acc = 0.0;
        for k in 0..a.cols() {
            acc += a.get(i, k) * x[k];
        }
        y[i] = acc;
    }
    flops::add_multiply(a.rows() as u64 * (2 * a.cols() as u64).saturating_sub(1));
    Ok(y)
}

/// Matrix-matrix product `Y = A * X`.
pub fn gemm(a: &DenseMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols() != x.rows() {
        return Err(Error::dim(
            "gemm",
            format!("{}x{} vs {}x{}", a.rows(), a.cols(), x.rows(), x.cols()),
        ));
    }
    let mut y = DenseMatrix::zeros(a.rows(), x.cols());
    for j in 0..x.cols() {
        for i in 0..a.rows() {
            let mut acc = 0.0;
            for k in 0..a.cols() {
                acc += a.get(i, k) * x.get(k, j);
            }
            y.set(i, j, acc);
        }
    }
    flops::add_multiply(
        a.rows() as u64 * x.cols() as u64 * (2 * a.cols() as u64).saturating_sub(1),
    );
    Ok(y)
}

/// Outer product `u * v^T` as a dense matrix.
pub fn outer(u: &DenseVector, v: &DenseVector) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(u.len(), v.len());
    for j in 0..v.len() {
        for i in 0..u.len() {
            m.set(i, j, u[i] * v[j]);
        }
    }
    flops::add_multiply(u.len() as u64 * v.len() as u64);
    m
}

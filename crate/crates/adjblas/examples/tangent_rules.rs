//! Forward-mode (tangent) rules: push input perturbations through each
//! operation and cross-check one of them against a finite difference.
//!
//! A tangent answers "if the inputs move along (A_tan, x_tan), how does
//! the output move?" — one directional derivative per sweep, computed to
//! machine precision rather than truncation error.
//!
//! Run with: `cargo run --example tangent_rules`

use adjblas::verify::fd_directional;
use adjblas::{
    dot_tangent, gemm_tangent, gemv_tangent, sandwich_tangent, solve_tangent,
    DenseMatrix, DenseVector, LuFactorization, Result,
};

fn main() -> Result<()> {
    // dot: d<a, x> = <a_tan, x> + <a, x_tan>
    let a = DenseVector::from_slice(&[1.0, 2.0, 3.0])?;
    let x = DenseVector::from_slice(&[4.0, 0.0, -1.0])?;
    let a_tan = DenseVector::from_slice(&[0.1, 0.0, 0.0])?;
    let x_tan = DenseVector::from_slice(&[0.0, 0.2, 0.0])?;
    let y_tan = dot_tangent(&a, &x, &a_tan, &x_tan)?;
    println!("dot tangent      = {y_tan}");

    // gemv: matrix and vector perturbed simultaneously.
    let m = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]])?;
    let v = DenseVector::from_slice(&[1.0, 1.0])?;
    let m_tan = DenseMatrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]])?;
    let v_tan = DenseVector::from_slice(&[0.5, 0.0])?;
    let mv_tan = gemv_tangent(&m, &v, &m_tan, &v_tan)?;
    println!("gemv tangent     = {:?}", mv_tan.as_slice());

    // gemm follows the same product rule at matrix granularity.
    let p = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]])?;
    let p_tan = DenseMatrix::from_rows(&[&[0.0, 0.0], &[1.0, 0.0]])?;
    let mm_tan = gemm_tangent(&m, &p, &m_tan, &p_tan)?;
    println!("gemm tangent     = {:?}", mm_tan.as_slice());

    // sandwich: Y = A·X·B with passive A and B is linear in X, so its
    // tangent is the same sandwich applied to X_tan.
    let s_tan = sandwich_tangent(&m, &p_tan, &p)?;
    println!("sandwich tangent = {:?}", s_tan.as_slice());

    // solve: x = A^{-1} b differentiates implicitly. The tangent solves
    //   A · x_tan = b_tan - A_tan · x
    // with the factorization already computed for the primal: O(n^2).
    let sys = DenseMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 4.0]])?;
    let rhs = DenseVector::from_slice(&[2.0, 4.0])?;
    let f = LuFactorization::factor(&sys)?;
    let sol = f.solve(&rhs)?;
    let sys_tan = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]])?;
    let rhs_tan = DenseVector::from_slice(&[0.0, 0.0])?;
    let sol_tan = solve_tangent(&f, &sol, &sys_tan, &rhs_tan)?;
    println!("solve tangent    = {:?}", sol_tan.as_slice());

    // Sanity: the same directional derivative from central differences.
    // Parameters are flattened [A | b]; the solve refactors each time.
    let point: Vec<f64> = sys.as_slice().iter().chain(rhs.as_slice()).copied().collect();
    let dir: Vec<f64> =
        sys_tan.as_slice().iter().chain(rhs_tan.as_slice()).copied().collect();
    let fd = fd_directional(
        |q| {
            let a = DenseMatrix::from_col_major(2, 2, &q[..4])?;
            let b = DenseVector::from_slice(&q[4..])?;
            Ok(LuFactorization::factor(&a)?.solve(&b)?.as_slice().to_vec())
        },
        &point,
        &dir,
        1e-5,
    )?;
    println!("fd check         = {fd:?}");
    for (analytic, numeric) in sol_tan.as_slice().iter().zip(&fd) {
        assert!((analytic - numeric).abs() < 1e-6);
    }
    println!("tangent matches finite differences");

    Ok(())
}

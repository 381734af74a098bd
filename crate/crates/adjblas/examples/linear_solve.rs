//! Factor a dense system once and solve against several right-hand sides,
//! including transposed solves, while watching the flop ledger.
//!
//! Run with: `cargo run --example linear_solve`

use adjblas::{flops, DenseMatrix, DenseVector, LuFactorization, Result};

fn main() -> Result<()> {
    // A 3x3 system built from rows. Entries are chosen so the exact
    // solution of A x = b below is (1, 1, 1).
    let a = DenseMatrix::from_rows(&[
        &[4.0, 1.0, 0.0],
        &[1.0, 5.0, 2.0],
        &[0.0, 2.0, 6.0],
    ])?;
    let b = DenseVector::from_slice(&[5.0, 8.0, 8.0])?;

    flops::reset();
    let f = LuFactorization::factor(&a)?;
    let after_factor = flops::snapshot();
    println!("factored a {}x{} matrix: {} flops", f.n(), f.n(), after_factor.factor_flops);
    println!("row swaps during pivoting: {}", f.num_swaps());

    let x = f.solve(&b)?;
    println!("x            = {:?}", x.as_slice());

    // The same factorization solves transposed systems A^T y = c, which is
    // what reverse-mode differentiation needs. No refactoring happens:
    // the factor counter stays put while the solve counter advances.
    let c = DenseVector::from_slice(&[1.0, 0.0, 0.0])?;
    let y = f.solve_transposed(&c)?;
    println!("A^T y = e0   : y = {:?}", y.as_slice());

    let end = flops::snapshot();
    let delta = end.delta_since(&after_factor);
    println!("substitution flops since factoring: {} (two solves at 2n^2 each)", delta.solve_flops);
    assert_eq!(delta.factor_flops, 0);

    // Singularity is detected at the offending column, not as NaN later.
    let singular = DenseMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]])?;
    let err = LuFactorization::factor(&singular).unwrap_err();
    println!("factoring a rank-1 matrix fails: {err}");

    Ok(())
}

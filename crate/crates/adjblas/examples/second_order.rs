//! Second-order adjoints of a linear solve: how the first-order
//! sensitivities (b_adj, A_adj) themselves move when (A, b, x_adj) move
//! along given tangents. This is the tangent-over-adjoint construction —
//! the building block for Hessian-vector products of any loss that looks
//! through a solve.
//!
//! Everything runs on the one factorization computed for the primal:
//! three substitution pairs, zero refactorizations.
//!
//! Run with: `cargo run --example second_order`

use adjblas::{
    flops, solve_adjoint, solve_second_order_adjoint, DenseMatrix, DenseVector,
    LuFactorization, Result,
};

fn main() -> Result<()> {
    let a = DenseMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 4.0]])?;
    let b = DenseVector::from_slice(&[2.0, 4.0])?;
    let x_adj = DenseVector::from_slice(&[1.0, 1.0])?;

    let f = LuFactorization::factor(&a)?;
    let x = f.solve(&b)?;
    let (b_adj, a_adj) = solve_adjoint(&f, &x, &x_adj)?;
    println!("first order:  b_adj = {:?}", b_adj.as_slice());
    println!("              A_adj = {:?} (column-major)", a_adj.as_slice());

    // Direction: perturb only A's top-left entry.
    let a_dot = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]])?;
    let b_dot = DenseVector::zeros(2);
    let x_adj_dot = DenseVector::zeros(2);

    flops::reset();
    let (b_adj_dot, a_adj_dot) =
        solve_second_order_adjoint(&f, &x, &x_adj, &a_dot, &b_dot, &x_adj_dot)?;
    let counts = flops::snapshot();

    // d/deps of b_adj = A(eps)^{-T} x_adj at A(eps) = A + eps*a_dot:
    // for this diagonal system, -1/4 in the first entry and 0 in the second.
    println!("second order: b_adj_dot = {:?}", b_adj_dot.as_slice());
    println!("              A_adj_dot = {:?} (column-major)", a_adj_dot.as_slice());
    assert!((b_adj_dot.as_slice()[0] - (-0.25)).abs() < 1e-15);
    assert_eq!(b_adj_dot.as_slice()[1], 0.0);

    println!(
        "cost: {} solve flops, {} factor flops",
        counts.solve_flops, counts.factor_flops
    );
    assert_eq!(counts.factor_flops, 0, "second order never refactors");
    // Three substitution pairs: the tangent solve, the adjoint solve, and
    // the adjoint-tangent solve. Each pair is 2n² flops.
    assert_eq!(counts.solve_flops, 3 * 2 * 2 * 2);

    Ok(())
}

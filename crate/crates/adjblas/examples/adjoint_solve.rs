//! Reverse-mode sensitivities of a linear solve: given x = A⁻¹b and a
//! seed x_adj, recover the gradients of <x_adj, x> with respect to b and
//! to every entry of A — at the cost of one transposed solve and one
//! outer product, reusing the primal factorization.
//!
//! The rule:  b_adj = A⁻ᵀ · x_adj,   A_adj = −b_adj · xᵀ.
//!
//! Run with: `cargo run --example adjoint_solve`

use adjblas::{
    flops, solve_adjoint, DenseMatrix, DenseVector, LuFactorization, Result,
};

fn main() -> Result<()> {
    // diag(2, 4) · x = (2, 4) has solution x = (1, 1); everything below is
    // checkable by hand.
    let a = DenseMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 4.0]])?;
    let b = DenseVector::from_slice(&[2.0, 4.0])?;

    let f = LuFactorization::factor(&a)?;
    let x = f.solve(&b)?;
    println!("x     = {:?}", x.as_slice());

    // Seed with ones: the functional being differentiated is x_0 + x_1.
    let x_adj = DenseVector::from_slice(&[1.0, 1.0])?;
    let (b_adj, a_adj) = solve_adjoint(&f, &x, &x_adj)?;

    // b_adj = A^{-T} (1,1) = (1/2, 1/4): moving b_i by eps moves the sum
    // of solution entries by b_adj_i * eps.
    println!("b_adj = {:?}", b_adj.as_slice());
    assert_eq!(b_adj.as_slice(), &[0.5, 0.25]);

    // A_adj = -b_adj x^T: growing A weakens the solution, hence the signs.
    println!("A_adj =");
    for i in 0..2 {
        println!("  [{}, {}]", a_adj.get(i, 0), a_adj.get(i, 1));
    }
    assert_eq!(a_adj.as_slice(), &[-0.5, -0.25, -0.5, -0.25]);

    // Many seeds, one factorization. Each extra gradient costs O(n^2)
    // substitution work; the O(n^3) factor count never moves.
    flops::reset();
    for i in 0..2 {
        let seed = DenseVector::unit(2, i)?;
        let (row_grad, _) = solve_adjoint(&f, &x, &seed)?;
        println!("gradient of x_{i} wrt b = {:?}", row_grad.as_slice());
    }
    let counts = flops::snapshot();
    println!(
        "two more gradients: {} solve flops, {} factor flops",
        counts.solve_flops, counts.factor_flops
    );
    assert_eq!(counts.factor_flops, 0);

    Ok(())
}

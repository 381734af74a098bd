//! Reverse-mode (adjoint) rules for the product kernels and the linear
//! solve, plus the second-order adjoint of the solve.
//!
//! Every rule is assignment-style: adjoints of the inputs are returned, not
//! accumulated, and fan-out accumulation is the tape's job. Passive
//! arguments (the outer factors of sandwich products) get no adjoint output
//! at all. For the solve, both first- and second-order rules run entirely
//! off the primal factorization; only plain and transposed triangular
//! solves are performed, never a refactorization.
//!
//! Sign convention: the matrix adjoint of a solve carries its minus sign
//! inside the returned value.

use crate::blas::{gemm, gemv, outer};
use crate::dense::{DenseMatrix, DenseVector, HasShape, Shape};
use crate::error::{Error, Result};
use crate::lu::LuFactorization;
use crate::tangent::solve_tangent;

/// A primal value bundled with a shape-matched adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointPair<T: HasShape> {
    pub value: T,
    pub adjoint: T,
}

impl<T: HasShape> AdjointPair<T> {
    pub fn new(value: T, adjoint: T) -> Result<Self> {
        if value.shape() != adjoint.shape() {
            return Err(Error::dim(
                "adjoint pair",
                format!("value {} vs adjoint {}", value.shape(), adjoint.shape()),
            ));
        }
        Ok(Self { value, adjoint })
    }

    pub fn shape(&self) -> Shape {
        self.value.shape()
    }
}

/// One term `A_i * X_i * B_i` of a sum of sandwich products. The outer
/// factors are passive; the active `X_i` has shape `(A_i.cols, B_i.rows)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichTerm {
    pub left: DenseMatrix,
    pub right: DenseMatrix,
}

impl SandwichTerm {
    pub fn new(left: DenseMatrix, right: DenseMatrix) -> Self {
        Self { left, right }
    }

    /// Shape of the active middle factor.
    pub fn inner_shape(&self) -> (usize, usize) {
        (self.left.cols(), self.right.rows())
    }

    /// Shape of the term's output.
    pub fn output_shape(&self) -> (usize, usize) {
        (self.left.rows(), self.right.cols())
    }
}

/// Adjoint of scalar multiplication `y = a * x`:
/// returns `(a_adj, x_adj) = (x * y_adj, a * y_adj)`.
pub fn mul_adjoint(a: f64, x: f64, y_adj: f64) -> (f64, f64) {
    (x * y_adj, a * y_adj)
}

/// Adjoint of the inner product `y = <a, x>`:
/// returns `(a_adj, x_adj) = (x * y_adj, a * y_adj)`.
pub fn dot_adjoint(
    a: &DenseVector,
    x: &DenseVector,
    y_adj: f64,
) -> Result<(DenseVector, DenseVector)> {
    if a.len() != x.len() {
        return Err(Error::dim("dot adjoint", format!("{} vs {}", a.len(), x.len())));
    }
    Ok((x.scale(y_adj), a.scale(y_adj)))
}

/// Adjoint of the matrix-vector product `y = A x`:
/// returns `(A_adj, x_adj) = (y_adj * x^T, A^T * y_adj)`.
pub fn gemv_adjoint(
    a: &DenseMatrix,
    x: &DenseVector,
    y_adj: &DenseVector,
) -> Result<(DenseMatrix, DenseVector)> {
    if x.len() != a.cols() || y_adj.len() != a.rows() {
        return Err(Error::dim(
            "gemv adjoint",
            format!(
                "{}x{} matrix vs x of {} and seed of {}",
                a.rows(),
                a.cols(),
                x.len(),
                y_adj.len()
            ),
        ));
    }
    let x_adj = gemv(&a.transpose(), y_adj)?;
    let a_adj = outer(y_adj, x);
    Ok((a_adj, x_adj))
}

/// Adjoint of the matrix-matrix product `Y = A X`:
/// returns `(A_adj, X_adj) = (Y_adj * X^T, A^T * Y_adj)` — two level-3
/// products.
pub fn gemm_adjoint(
    a: &DenseMatrix,
    x: &DenseMatrix,
    y_adj: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    if a.cols() != x.rows() || y_adj.rows() != a.rows() || y_adj.cols() != x.cols() {
        return Err(Error::dim(
            "gemm adjoint",
            format!(
                "{}x{} times {}x{} vs seed {}x{}",
                a.rows(),
                a.cols(),
                x.rows(),
                x.cols(),
                y_adj.rows(),
                y_adj.cols()
            ),
        ));
    }
    let a_adj = gemm(y_adj, &x.transpose())?;
    let x_adj = gemm(&a.transpose(), y_adj)?;
    Ok((a_adj, x_adj))
}

/// Adjoint of the sandwich product `Y = A X B` with passive outer factors:
/// returns `X_adj = A^T * Y_adj * B^T`. No adjoints for A and B.
pub fn sandwich_adjoint(
    a: &DenseMatrix,
    b: &DenseMatrix,
    y_adj: &DenseMatrix,
) -> Result<DenseMatrix> {
    if y_adj.rows() != a.rows() || y_adj.cols() != b.cols() {
        return Err(Error::dim(
            "sandwich adjoint",
            format!(
                "outer factors {}x{} and {}x{} vs seed {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols(),
                y_adj.rows(),
                y_adj.cols()
            ),
        ));
    }
    gemm(&gemm(&a.transpose(), y_adj)?, &b.transpose())
}

/// Adjoint of `Y = sum_i A_i * X_i * B_i`: every term receives the same
/// output adjoint, so `X_i_adj = A_i^T * Y_adj * B_i^T` term by term.
pub fn sum_sandwich_adjoint(
    terms: &[SandwichTerm],
    y_adj: &DenseMatrix,
) -> Result<Vec<DenseMatrix>> {
    if terms.is_empty() {
        return Err(Error::EmptyTerms);
    }
    let mut out = Vec::with_capacity(terms.len());
    for (i, term) in terms.iter().enumerate() {
        let (m, p) = term.output_shape();
        if m != y_adj.rows() || p != y_adj.cols() {
            return Err(Error::dim(
                "sum sandwich adjoint",
                format!(
                    "term {i} produces {m}x{p} but seed is {}x{}",
                    y_adj.rows(),
                    y_adj.cols()
                ),
            ));
        }
        out.push(sandwich_adjoint(&term.left, &term.right, y_adj)?);
    }
    Ok(out)
}

/// Adjoint of the solve `x = A^{-1} b` at the primal solution `x`:
/// returns `(b_adj, A_adj) = (A^{-T} x_adj, -b_adj * x^T)`, reusing the
/// factorization. Performs no factorization.
pub fn solve_adjoint(
    f: &LuFactorization,
    x: &DenseVector,
    x_adj: &DenseVector,
) -> Result<(DenseVector, DenseMatrix)> {
    let n = f.n();
    if x.len() != n || x_adj.len() != n {
        return Err(Error::dim(
            "solve adjoint",
            format!("system is {n}, x is {}, seed is {}", x.len(), x_adj.len()),
        ));
    }
    let b_adj = f.solve_transposed(x_adj)?;
    let a_adj = outer(&b_adj, x).neg();
    Ok((b_adj, a_adj))
}

/// Second-order adjoint of the solve: the directional derivative of
/// [`solve_adjoint`] along `(a_dot, b_dot, x_adj_dot)`, evaluated with the
/// primal factorization only.
///
/// Three triangular-solve pairs run in total — the tangent solve for
/// `x_dot`, the transposed solve for `b_adj`, and the transposed solve for
/// `b_adj_dot` — and no factorization. Returns `(b_adj_dot, A_adj_dot)`.
pub fn solve_second_order_adjoint(
    f: &LuFactorization,
    x: &DenseVector,
    x_adj: &DenseVector,
    a_dot: &DenseMatrix,
    b_dot: &DenseVector,
    x_adj_dot: &DenseVector,
) -> Result<(DenseVector, DenseMatrix)> {
    let n = f.n();
    if x.len() != n
        || x_adj.len() != n
        || b_dot.len() != n
        || x_adj_dot.len() != n
        || a_dot.rows() != n
        || a_dot.cols() != n
    {
        return Err(Error::dim(
            "solve second-order adjoint",
            format!(
                "system is {n}: x {}, seed {}, a_dot {}x{}, b_dot {}, seed_dot {}",
                x.len(),
                x_adj.len(),
                a_dot.rows(),
                a_dot.cols(),
                b_dot.len(),
                x_adj_dot.len()
            ),
        ));
    }
    let x_dot = solve_tangent(f, x, a_dot, b_dot)?;
    let b_adj = f.solve_transposed(x_adj)?;
    let b_adj_dot = f.solve_transposed(&x_adj_dot.sub(&gemv(&a_dot.transpose(), &b_adj)?)?)?;
    let a_adj_dot = outer(&b_adj_dot, x).add(&outer(&b_adj, &x_dot))?.neg();
    Ok((b_adj_dot, a_adj_dot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blas::dot;
    use crate::flops;
    use crate::verify::draws::{random_matrix, random_vector, well_conditioned_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vecf(v: &[f64]) -> DenseVector {
        DenseVector::from_slice(v).unwrap()
    }

    #[test]
    fn mul_adjoint_examples() {
        assert_eq!(mul_adjoint(2.0, 3.0, 1.0), (3.0, 2.0));
        assert_eq!(mul_adjoint(5.0, -4.0, 0.0), (0.0, 0.0));
        assert_eq!(mul_adjoint(1.5, -2.0, 0.5), (-1.0, 0.75));
    }

    #[test]
    fn dot_adjoint_examples() {
        let a = vecf(&[1.0, 2.0]);
        let x = vecf(&[3.0, 4.0]);
        let (a_adj, x_adj) = dot_adjoint(&a, &x, 1.0).unwrap();
        assert_eq!(a_adj, x);
        assert_eq!(x_adj, a);

        let (a_adj, x_adj) = dot_adjoint(&a, &x, 0.0).unwrap();
        assert_eq!(a_adj, vecf(&[0.0, 0.0]));
        assert_eq!(x_adj, vecf(&[0.0, 0.0]));
    }

    #[test]
    fn gemv_adjoint_examples() {
        let a = DenseMatrix::identity(2);
        let x = vecf(&[2.0, 3.0]);
        let (a_adj, x_adj) = gemv_adjoint(&a, &x, &vecf(&[1.0, 0.0])).unwrap();
        assert_eq!(x_adj, vecf(&[1.0, 0.0]));
        assert_eq!(a_adj, DenseMatrix::from_rows(&[&[2.0, 3.0], &[0.0, 0.0]]).unwrap());

        let (a_adj, x_adj) = gemv_adjoint(&a, &x, &vecf(&[0.0, 0.0])).unwrap();
        assert_eq!(a_adj, DenseMatrix::zeros(2, 2));
        assert_eq!(x_adj, vecf(&[0.0, 0.0]));
    }

    #[test]
    fn gemm_adjoint_examples() {
        let i = DenseMatrix::identity(2);
        let y_adj = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let (a_adj, x_adj) = gemm_adjoint(&i, &i, &y_adj).unwrap();
        assert_eq!(a_adj, y_adj);
        assert_eq!(x_adj, y_adj);
    }

    // level reduction: one column of gemm_adjoint is gemv_adjoint, one row
    // of gemv_adjoint is dot_adjoint
    #[test]
    fn adjoint_rules_collapse_across_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (m, n) = (6, 4);
        let a = random_matrix(&mut rng, m, n);
        let x = random_vector(&mut rng, n);
        let y_seed = random_vector(&mut rng, m);

        let (a_adj_v, x_adj_v) = gemv_adjoint(&a, &x, &y_seed).unwrap();
        let (a_adj_m, x_adj_m) =
            gemm_adjoint(&a, &DenseMatrix::from_column(&x), &DenseMatrix::from_column(&y_seed))
                .unwrap();
        for j in 0..n {
            for i in 0..m {
                assert_eq!(a_adj_m.get(i, j), a_adj_v.get(i, j));
            }
            assert_eq!(x_adj_m.get(j, 0), x_adj_v[j]);
        }

        let row = random_matrix(&mut rng, 1, n);
        let row_vec: DenseVector = {
            let data: Vec<f64> = (0..n).map(|j| row.get(0, j)).collect();
            vecf(&data)
        };
        let seed = 0.7;
        let (a_adj_r, x_adj_r) = gemv_adjoint(&row, &x, &vecf(&[seed])).unwrap();
        let (a_adj_d, x_adj_d) = dot_adjoint(&row_vec, &x, seed).unwrap();
        for j in 0..n {
            assert_eq!(a_adj_r.get(0, j), a_adj_d[j]);
            assert_eq!(x_adj_r[j], x_adj_d[j]);
        }
    }

    #[test]
    fn sandwich_adjoint_examples() {
        let i = DenseMatrix::identity(2);
        let y_adj = DenseMatrix::from_rows(&[&[1.0, -2.0], &[0.5, 4.0]]).unwrap();
        assert_eq!(sandwich_adjoint(&i, &i, &y_adj).unwrap(), y_adj);

        // B = I degenerates into the X side of gemm_adjoint
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let a = random_matrix(&mut rng, 3, 4);
        let seed = random_matrix(&mut rng, 3, 2);
        let via_sandwich = sandwich_adjoint(&a, &DenseMatrix::identity(2), &seed).unwrap();
        let x = random_matrix(&mut rng, 4, 2);
        let (_, via_gemm) = gemm_adjoint(&a, &x, &seed).unwrap();
        for j in 0..2 {
            for i in 0..4 {
                assert!((via_sandwich.get(i, j) - via_gemm.get(i, j)).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn sum_sandwich_examples() {
        let i = DenseMatrix::identity(2);
        let y_adj = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();

        let one = sum_sandwich_adjoint(
            &[SandwichTerm::new(i.clone(), i.clone())],
            &y_adj,
        )
        .unwrap();
        assert_eq!(one[0], sandwich_adjoint(&i, &i, &y_adj).unwrap());

        let two = sum_sandwich_adjoint(
            &[
                SandwichTerm::new(i.clone(), i.clone()),
                SandwichTerm::new(i.clone(), i.clone()),
            ],
            &y_adj,
        )
        .unwrap();
        assert_eq!(two[0], y_adj);
        assert_eq!(two[1], y_adj);

        assert!(matches!(sum_sandwich_adjoint(&[], &y_adj), Err(Error::EmptyTerms)));

        let bad = sum_sandwich_adjoint(
            &[
                SandwichTerm::new(i.clone(), i.clone()),
                SandwichTerm::new(DenseMatrix::identity(3), i.clone()),
            ],
            &y_adj,
        )
        .unwrap_err();
        assert!(bad.to_string().contains("term 1"), "got {bad}");
    }

    #[test]
    fn solve_adjoint_diagonal_example() {
        let a = DenseMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 4.0]]).unwrap();
        let f = LuFactorization::factor(&a).unwrap();
        let x = f.solve(&vecf(&[2.0, 4.0])).unwrap();
        assert_eq!(x, vecf(&[1.0, 1.0]));

        let (b_adj, a_adj) = solve_adjoint(&f, &x, &vecf(&[1.0, 1.0])).unwrap();
        assert_eq!(b_adj, vecf(&[0.5, 0.25]));
        let want = DenseMatrix::from_rows(&[&[-0.5, -0.5], &[-0.25, -0.25]]).unwrap();
        assert_eq!(a_adj, want);

        let (b_adj, a_adj) = solve_adjoint(&f, &x, &vecf(&[0.0, 0.0])).unwrap();
        assert_eq!(b_adj.norm_max(), 0.0);
        assert_eq!(a_adj.norm_max(), 0.0);
    }

    // the matrix adjoint is exactly -b_adj x^T as computed
    #[test]
    fn solve_adjoint_internal_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let a = well_conditioned_matrix(&mut rng, 7);
        let b = random_vector(&mut rng, 7);
        let f = LuFactorization::factor(&a).unwrap();
        let x = f.solve(&b).unwrap();
        let x_adj = random_vector(&mut rng, 7);
        let (b_adj, a_adj) = solve_adjoint(&f, &x, &x_adj).unwrap();
        assert_eq!(a_adj, outer(&b_adj, &x).neg());
    }

    #[test]
    fn solve_adjoint_reuses_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let a = well_conditioned_matrix(&mut rng, 9);
        let b = random_vector(&mut rng, 9);
        let f = LuFactorization::factor(&a).unwrap();
        let x = f.solve(&b).unwrap();

        let before = flops::snapshot();
        for _ in 0..4 {
            solve_adjoint(&f, &x, &random_vector(&mut rng, 9)).unwrap();
        }
        let delta = flops::snapshot().delta_since(&before);
        assert_eq!(delta.factor_flops, 0);
        assert_eq!(delta.solve_flops, 4 * 2 * 81);
    }

    // <x_tan, x_adj> == <b_tan, b_adj> + sum(A_tan o A_adj)
    #[test]
    fn solve_pair_satisfies_pairing_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..10 {
            let n = 8;
            let a = well_conditioned_matrix(&mut rng, n);
            let b = random_vector(&mut rng, n);
            let f = LuFactorization::factor(&a).unwrap();
            let x = f.solve(&b).unwrap();

            let a_tan = random_matrix(&mut rng, n, n);
            let b_tan = random_vector(&mut rng, n);
            let x_adj = random_vector(&mut rng, n);

            let x_tan = solve_tangent(&f, &x, &a_tan, &b_tan).unwrap();
            let (b_adj, a_adj) = solve_adjoint(&f, &x, &x_adj).unwrap();

            let lhs = dot(&x_tan, &x_adj).unwrap();
            let rhs = dot(&b_tan, &b_adj).unwrap() + a_tan.frobenius_dot(&a_adj).unwrap();
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            assert!(((lhs - rhs) / scale).abs() <= 1e-12, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn second_order_zero_direction_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let n = 5;
        let a = well_conditioned_matrix(&mut rng, n);
        let b = random_vector(&mut rng, n);
        let f = LuFactorization::factor(&a).unwrap();
        let x = f.solve(&b).unwrap();
        let x_adj = random_vector(&mut rng, n);

        let (b_adj_dot, a_adj_dot) = solve_second_order_adjoint(
            &f,
            &x,
            &x_adj,
            &DenseMatrix::zeros(n, n),
            &DenseVector::zeros(n),
            &DenseVector::zeros(n),
        )
        .unwrap();
        assert_eq!(b_adj_dot.norm_max(), 0.0);
        assert_eq!(a_adj_dot.norm_max(), 0.0);
    }

    // with A = I the second-order rhs collapses to x_adj_dot - A_dot^T x_adj
    #[test]
    fn second_order_identity_system_hand_check() {
        let f = LuFactorization::factor(&DenseMatrix::identity(2)).unwrap();
        let b = vecf(&[3.0, -1.0]);
        let x = f.solve(&b).unwrap();
        let x_adj = vecf(&[1.0, 2.0]);
        let a_dot = DenseMatrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]).unwrap();
        let b_dot = vecf(&[0.5, 0.5]);
        let x_adj_dot = vecf(&[1.0, 1.0]);

        let (b_adj_dot, a_adj_dot) =
            solve_second_order_adjoint(&f, &x, &x_adj, &a_dot, &b_dot, &x_adj_dot).unwrap();

        // b_adj_dot = x_adj_dot - A_dot^T x_adj = (1,1) - (-2,1) = (3,0)
        assert_eq!(b_adj_dot, vecf(&[3.0, 0.0]));

        // x_dot = b_dot - A_dot x = (0.5,0.5) - (-1,-3) = (1.5,3.5)
        // A_adj_dot = -(b_adj_dot x^T + x_adj x_dot^T)
        let x_dot = vecf(&[1.5, 3.5]);
        let want = outer(&b_adj_dot, &x).add(&outer(&x_adj, &x_dot)).unwrap().neg();
        assert_eq!(a_adj_dot, want);
    }

    #[test]
    fn second_order_never_factors_and_uses_three_solves() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let n = 6;
        let a = well_conditioned_matrix(&mut rng, n);
        let b = random_vector(&mut rng, n);
        let f = LuFactorization::factor(&a).unwrap();
        let x = f.solve(&b).unwrap();

        let before = flops::snapshot();
        solve_second_order_adjoint(
            &f,
            &x,
            &random_vector(&mut rng, n),
            &random_matrix(&mut rng, n, n),
            &random_vector(&mut rng, n),
            &random_vector(&mut rng, n),
        )
        .unwrap();
        let delta = flops::snapshot().delta_since(&before);
        assert_eq!(delta.factor_flops, 0);
        assert_eq!(delta.solve_flops, 3 * 2 * (n as u64) * (n as u64));
    }
}

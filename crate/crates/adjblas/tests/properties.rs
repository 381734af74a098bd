//! Property-based tests over randomized inputs: format round-trips that
//! must hold for any finite float, and algebraic identities that must hold
//! for any conforming shapes, not just the seeded draws the verification
//! suite uses.

use adjblas::cli::fmt_machine;
use adjblas::dense::{
    matrix_to_text, parse_matrix_text, parse_vector_text, vector_to_text,
};
use adjblas::{
    dot, dot_adjoint, dot_tangent, gemm, gemm_adjoint, gemv, gemv_adjoint,
    DenseMatrix, DenseVector, LuFactorization,
};
use proptest::collection::vec;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    // Anything representable and finite, including subnormals and -0.0.
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

fn unit_entries(len: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(-1.0..1.0f64, len)
}

fn frobenius(m: &DenseMatrix, w: &DenseMatrix) -> f64 {
    m.as_slice().iter().zip(w.as_slice()).map(|(a, b)| a * b).sum()
}

proptest! {
    #[test]
    fn machine_format_round_trips_any_finite_float(v in finite()) {
        let parsed: f64 = fmt_machine(v).parse().expect("parses back");
        prop_assert_eq!(parsed.to_bits(), v.to_bits());
    }

    #[test]
    fn text_format_round_trips_matrices(
        rows in 1usize..6,
        cols in 1usize..6,
        seed in any::<u64>(),
    ) {
        // Entries derived from the seed keep the case shrinkable.
        let entries: Vec<f64> = (0..rows * cols)
            .map(|i| ((seed.wrapping_add(i as u64) % 2000) as f64 - 1000.0) / 3.0)
            .collect();
        let m = DenseMatrix::from_col_major(rows, cols, &entries).expect("valid");
        let back = parse_matrix_text(&matrix_to_text(&m)).expect("parses");
        prop_assert_eq!(back.as_slice(), m.as_slice());

        let v = DenseVector::from_slice(&entries[..rows]).expect("valid");
        let vback = parse_vector_text(&vector_to_text(&v)).expect("parses");
        prop_assert_eq!(vback.as_slice(), v.as_slice());
    }

    #[test]
    fn dot_identity_holds_for_arbitrary_vectors(
        n in 1usize..12,
        seed in any::<u64>(),
    ) {
        let mut draw = {
            let mut state = seed | 1;
            move || {
                // xorshift keeps this test's inputs independent of rand.
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state % 2001) as f64 / 1000.0 - 1.0
            }
        };
        let mk = |draw: &mut dyn FnMut() -> f64, n: usize| {
            DenseVector::from_slice(&(0..n).map(|_| draw()).collect::<Vec<_>>())
                .expect("valid")
        };
        let a = mk(&mut draw, n);
        let x = mk(&mut draw, n);
        let a_tan = mk(&mut draw, n);
        let x_tan = mk(&mut draw, n);
        let y_adj = draw();

        let y_tan = dot_tangent(&a, &x, &a_tan, &x_tan).expect("conforming");
        let (a_adj, x_adj) = dot_adjoint(&a, &x, y_adj).expect("conforming");
        let lhs = y_tan * y_adj;
        let rhs = dot(&a_tan, &a_adj).expect("conforming")
            + dot(&x_tan, &x_adj).expect("conforming");
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0));
    }

    #[test]
    fn gemv_and_gemm_adjoints_satisfy_the_identity(
        m in 1usize..6,
        n in 1usize..6,
        p in 1usize..6,
        a_e in vec(-1.0..1.0f64, 25),
        x_e in vec(-1.0..1.0f64, 25),
        s_e in vec(-1.0..1.0f64, 25),
    ) {
        // gemv: seed with s, perturb only x for brevity; the identity
        // reduces to <A x_tan, s> = <x_tan, A^T s>.
        let a = DenseMatrix::from_col_major(m, n, &a_e[..m * n]).expect("valid");
        let x_tan = DenseVector::from_slice(&x_e[..n]).expect("valid");
        let s = DenseVector::from_slice(&s_e[..m]).expect("valid");
        let x0 = DenseVector::zeros(n);
        let (_, x_adj) = gemv_adjoint(&a, &x0, &s).expect("conforming");
        let lhs = dot(&gemv(&a, &x_tan).expect("conforming"), &s).expect("conforming");
        let rhs = dot(&x_tan, &x_adj).expect("conforming");
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0));

        // gemm: same reduction with matrices, using the Frobenius pairing.
        let xm = DenseMatrix::from_col_major(n, p, &x_e[..n * p]).expect("valid");
        let sm = DenseMatrix::from_col_major(m, p, &s_e[..m * p]).expect("valid");
        let x0m = DenseMatrix::zeros(n, p);
        let (_, xm_adj) = gemm_adjoint(&a, &x0m, &sm).expect("conforming");
        let lhs = frobenius(&gemm(&a, &xm).expect("conforming"), &sm);
        let rhs = frobenius(&xm, &xm_adj);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0));
    }

    #[test]
    fn lu_solves_reproduce_the_right_hand_side(
        n in 1usize..8,
        entries in vec(-1.0..1.0f64, 64),
        rhs in unit_entries(8),
    ) {
        // Diagonal dominance keeps every sampled system far from singular.
        let mut m = DenseMatrix::from_col_major(n, n, &entries[..n * n]).expect("valid");
        for i in 0..n {
            m.set(i, i, m.get(i, i) + n as f64 + 1.0);
        }
        let b = DenseVector::from_slice(&rhs[..n]).expect("valid");
        let f = LuFactorization::factor(&m).expect("diagonally dominant");
        let x = f.solve(&b).expect("solves");
        let back = gemv(&m, &x).expect("conforming");
        for i in 0..n {
            prop_assert!((back.as_slice()[i] - b.as_slice()[i]).abs() <= 1e-9);
        }

        // And the transposed solve against the transposed matrix.
        let y = f.solve_transposed(&b).expect("solves");
        let mt = m.transpose();
        let back_t = gemv(&mt, &y).expect("conforming");
        for i in 0..n {
            prop_assert!((back_t.as_slice()[i] - b.as_slice()[i]).abs() <= 1e-9);
        }
    }
}

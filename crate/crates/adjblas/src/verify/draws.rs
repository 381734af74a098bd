//! Seeded random draws for tests, checks, and benchmarks.
//!
//! Entries are uniform in [-1, 1] ("unit-scaled"), and square systems are
//! made diagonally dominant by construction so that conditioning never
//! masks a rule bug: the finite-difference and identity tolerances assume
//! residuals near roundoff, which only holds away from ill-conditioning.

use rand::Rng;

use crate::dense::{DenseMatrix, DenseVector};

/// Vector with entries uniform in [-1, 1].
pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DenseVector {
    let data: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    DenseVector::from_slice(&data).expect("uniform draws are finite")
}

/// Matrix with entries uniform in [-1, 1], drawn in column-major order.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DenseMatrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-1.0..=1.0)).collect();
    DenseMatrix::from_col_major(rows, cols, &data).expect("uniform draws are finite")
}

/// Diagonally dominant square matrix `R + n·I` with `R` uniform in [-1, 1].
///
/// Every row's diagonal exceeds the sum of its off-diagonal magnitudes, so
/// the matrix is nonsingular with condition number O(1) in practice, and
/// partial pivoting never encounters a tie.
pub fn well_conditioned_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DenseMatrix {
    let mut a = random_matrix(rng, n, n);
    for i in 0..n {
        a.set(i, i, a.get(i, i) + n as f64);
    }
    a
}

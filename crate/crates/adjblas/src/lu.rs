//! Pivoted LU factorization with plain and transposed solves.
//!
//! `P * A = L * U` with partial (row) pivoting; L is unit lower triangular
//! and both factors are packed into one square matrix. The factorization is
//! the reusable object behind every solve in this crate: the primal system,
//! the tangent system, the adjoint (transposed) system, and all second-order
//! systems run off one factorization of A. The transposed solve uses
//! `A^T = U^T * L^T * P`, so no second factorization is ever needed.

use crate::dense::{DenseMatrix, DenseVector};
use crate::error::{Error, Result};
use crate::flops;

/// Pivot floor relative to the max-abs entry of the factored matrix. A pivot
/// at or below this scaled threshold aborts factorization as singular.
pub const PIVOT_FLOOR_SCALE: f64 = 1e-12;

/// Residual scale for solves: `||A x - b||_inf <= SOLVE_RESIDUAL_TOL *
/// ||A||_max * ||x||_inf * n` on any factorizable system.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-12;

/// Packed pivoted triangular factors of a square matrix.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    lu: DenseMatrix,
    perm: Vec<usize>,
    num_swaps: usize,
}

impl LuFactorization {
    /// Factor a square matrix with partial pivoting.
    ///
    /// Adds the closed-form (2/3) n^3 tally to the factor counter. Fails
    /// with [`Error::Singular`] naming the column whose pivot fell below
    /// `PIVOT_FLOOR_SCALE * ||A||_max`.
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare { rows: a.rows(), cols: a.cols() });
        }
        let n = a.rows();
        let pivot_floor = PIVOT_FLOOR_SCALE * a.norm_max();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut num_swaps = 0usize;

        for k in 0..n {
            let mut p = k;
            let mut best = lu.get(k, k).abs();
            for i in k + 1..n {
                let cand = lu.get(i, k).abs();
                if cand > best {
                    best = cand;
                    p = i;
                }
            }
            if best <= pivot_floor {
                return Err(Error::Singular { col: k });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu.get(k, j);
                    lu.set(k, j, lu.get(p, j));
                    lu.set(p, j, tmp);
                }
                perm.swap(k, p);
                num_swaps += 1;
            }
            let pivot = lu.get(k, k);
            for i in k + 1..n {
                lu.set(i, k, lu.get(i, k) / pivot);
            }
            for j in k + 1..n {
                let ukj = lu.get(k, j);
                if ukj == 0.0 {
                    continue;
                }
                for i in k + 1..n {
                    lu.set(i, j, lu.get(i, j) - lu.get(i, k) * ukj);
                }
            }
        }

        let n64 = n as u64;
        flops::add_factor(2 * n64 * n64 * n64 / 3);
        Ok(Self { lu, perm, num_swaps })
    }

    pub fn n(&self) -> usize {
        self.lu.rows()
    }

    /// Row permutation: row `i` of `P * A` is row `perm[i]` of `A`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn num_swaps(&self) -> usize {
        self.num_swaps
    }

    /// The packed factors: strict lower triangle holds L (unit diagonal
    /// implied), upper triangle holds U.
    pub fn packed(&self) -> &DenseMatrix {
        &self.lu
    }

    /// Unpack into explicit `(L, U)` factors.
    pub fn unpack(&self) -> (DenseMatrix, DenseMatrix) {
        let n = self.n();
        let mut l = DenseMatrix::identity(n);
        let mut u = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                if i > j {
                    l.set(i, j, self.lu.get(i, j));
                } else {
                    u.set(i, j, self.lu.get(i, j));
                }
            }
        }
        (l, u)
    }

    /// Solve `A x = b` by forward/back substitution against the stored
    /// factors. Adds 2 n^2 to the solve counter; never refactors.
    pub fn solve(&self, b: &DenseVector) -> Result<DenseVector> {
        let n = self.n();
        if b.len() != n {
            return Err(Error::dim("lu solve", format!("system is {n}, rhs is {}", b.len())));
        }
        // x := P b, then L z = x, then U x = z
        let mut x = DenseVector::zeros(n);
        for i in 0..n {
            x[i] = b[self.perm[i]];
        }
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu.get(i, j) * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu.get(i, j) * x[j];
            }
            x[i] = acc / self.lu.get(i, i);
        }
        let n64 = n as u64;
        flops::add_solve(2 * n64 * n64);
        Ok(x)
    }

    /// Solve `A^T y = c` with the same factorization, no refactoring:
    /// `U^T z = c`, then `L^T w = z`, then `y = P^T w`.
    pub fn solve_transposed(&self, c: &DenseVector) -> Result<DenseVector> {
        let n = self.n();
        if c.len() != n {
            return Err(Error::dim(
                "lu transposed solve",
                format!("system is {n}, rhs is {}", c.len()),
            ));
        }
        let mut w = DenseVector::zeros(n);
        // U^T is lower triangular with diagonal U_ii
        for i in 0..n {
            let mut acc = c[i];
            for j in 0..i {
                acc -= self.lu.get(j, i) * w[j];
            }
            w[i] = acc / self.lu.get(i, i);
        }
        // L^T is unit upper triangular
        for i in (0..n).rev() {
            let mut acc = w[i];
            for j in i + 1..n {
                acc -= self.lu.get(j, i) * w[j];
            }
            w[i] = acc;
        }
        let mut y = DenseVector::zeros(n);
        for i in 0..n {
            y[self.perm[i]] = w[i];
        }
        let n64 = n as u64;
        flops::add_solve(2 * n64 * n64);
        Ok(y)
    }
}

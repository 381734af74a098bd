//! Floating-point operation accounting, partitioned by operation class.
//!
//! Counts are approximate closed-form tallies recorded once per kernel call
//! (2n-1 for a length-n dot, (2/3)n^3 for an LU factorization, 2n^2 per
//! triangular solve pair), which is what the asymptotic reuse measurements
//! need. Each thread owns an independent session counter; sessions from
//! worker threads are combined with [`merge`].

use std::cell::Cell;

/// Snapshot of the current session's counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FlopCounter {
    /// Flops spent inside LU factorizations.
    pub factor_flops: u64,
    /// Flops spent inside triangular solves (plain and transposed).
    pub solve_flops: u64,
    /// Flops spent inside products: dot, gemv, gemm, outer.
    pub multiply_flops: u64,
}

impl FlopCounter {
    pub fn total(&self) -> u64 {
        self.factor_flops + self.solve_flops + self.multiply_flops
    }

    /// Counter-wise difference against an earlier snapshot.
    pub fn delta_since(&self, earlier: &FlopCounter) -> FlopCounter {
        FlopCounter {
            factor_flops: self.factor_flops - earlier.factor_flops,
            solve_flops: self.solve_flops - earlier.solve_flops,
            multiply_flops: self.multiply_flops - earlier.multiply_flops,
        }
    }
}

thread_local! {
    static SESSION: Cell<FlopCounter> = const { Cell::new(FlopCounter {
        factor_flops: 0,
        solve_flops: 0,
        multiply_flops: 0,
    }) };
}

/// Current counters for this thread's session.
pub fn snapshot() -> FlopCounter {
    SESSION.with(|s| s.get())
}

/// Zero this thread's session counters.
pub fn reset() {
    SESSION.with(|s| s.set(FlopCounter::default()));
}

/// Fold another session's counters (e.g. from a worker thread) into this one.
pub fn merge(other: FlopCounter) {
    SESSION.with(|s| {
        let mut cur = s.get();
        cur.factor_flops += other.factor_flops;
        cur.solve_flops += other.solve_flops;
        cur.multiply_flops += other.multiply_flops;
        s.set(cur);
    });
}

pub(crate) fn add_factor(n: u64) {
    SESSION.with(|s| {
        let mut cur = s.get();
        cur.factor_flops += n;
        s.set(cur);
    });
}

pub(crate) fn add_solve(n: u64) {
    SESSION.with(|s| {
        let mut cur = s.get();
        cur.solve_flops += n;
        s.set(cur);
    });
}

pub(crate) fn add_multiply(n: u64) {
    SESSION.with(|s| {
        let mut cur = s.get();
        cur.multiply_flops += n;
        s.set(cur);
    });
}

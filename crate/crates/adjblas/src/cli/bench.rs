//! Flop-counted benchmark of factorization reuse.
//!
//! For each system size the driver measures two strategies for computing
//! `k` adjoints of a solve:
//!
//! - **reuse**: factor once, then run every adjoint through the stored
//!   factorization (two triangular substitutions each, O(n²));
//! - **no reuse**: re-factor the matrix for every adjoint (O(n³) each), as
//!   a gradient code without factorization caching would.
//!
//! Flop counters are the ground truth — they are deterministic closed-form
//! tallies, so the fitted growth exponents are reproducible bit for bit.
//! Wall-clock times are recorded alongside for illustration only; at these
//! sizes they are dominated by noise and never gate anything.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adjoint::solve_adjoint;
use crate::dense::{DenseMatrix, DenseVector};
use crate::error::{Error, Result};
use crate::flops;
use crate::lu::LuFactorization;
use crate::verify::draws::{random_vector, well_conditioned_matrix};

/// One measurement: `k` adjoints of an `n`-dimensional solve, with or
/// without factorization reuse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    /// System dimension.
    pub n: usize,
    /// Flops spent factoring, summed over the whole record: one
    /// factorization under reuse regardless of the adjoint count, `1 + k`
    /// factorizations (primal plus one per adjoint) without.
    pub factor_flops: u64,
    /// Triangular-substitution flops per adjoint. Identical under both
    /// strategies — reuse changes how often the factorization is paid for,
    /// not what a substitution costs.
    pub solve_flops_per_adjoint: u64,
    /// Seconds spent factoring (total for the record, best of the
    /// configured repetitions).
    pub wall_time_factor: f64,
    /// Seconds per adjoint for everything an additional adjoint costs:
    /// the substitutions alone under reuse, re-factorization plus
    /// substitutions without.
    pub wall_time_adjoint_solve: f64,
    /// Whether this record reused one factorization across all adjoints.
    pub reuse: bool,
}

/// Configuration for [`run_bench`].
#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// System sizes to measure; at least two, each at least 2, so a
    /// log-log slope can be fitted.
    pub sizes: Vec<usize>,
    /// Adjoints per system (`k`).
    pub adjoints: usize,
    /// Timing repetitions; the best time is kept. Flop counts are
    /// identical across repetitions.
    pub reps: usize,
    /// Seed for the system draws.
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { sizes: vec![64, 128, 256], adjoints: 16, reps: 3, seed: 42 }
    }
}

/// Runs the benchmark and returns two records (reuse, then no-reuse) per
/// size, in the order the sizes were given.
pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRecord>> {
    if config.sizes.len() < 2 {
        return Err(Error::InvalidArgument {
            what: "need at least two sizes to fit a growth exponent".to_string(),
        });
    }
    if let Some(&n) = config.sizes.iter().find(|&&n| n < 2) {
        return Err(Error::InvalidArgument {
            what: format!("sizes must be at least 2, got {n}"),
        });
    }
    if config.adjoints < 1 {
        return Err(Error::InvalidArgument {
            what: "adjoint count must be at least 1".to_string(),
        });
    }
    if config.reps < 1 {
        return Err(Error::InvalidArgument {
            what: "repetitions must be at least 1".to_string(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut records = Vec::with_capacity(config.sizes.len() * 2);
    for &n in &config.sizes {
        let a = well_conditioned_matrix(&mut rng, n);
        let b = random_vector(&mut rng, n);
        let seeds: Vec<DenseVector> =
            (0..config.adjoints).map(|_| random_vector(&mut rng, n)).collect();
        records.push(measure(&a, &b, &seeds, config.reps, true)?);
        records.push(measure(&a, &b, &seeds, config.reps, false)?);
    }
    Ok(records)
}

fn measure(
    a: &DenseMatrix,
    b: &DenseVector,
    seeds: &[DenseVector],
    reps: usize,
    reuse: bool,
) -> Result<BenchRecord> {
    let k = seeds.len() as u64;
    let mut factor_flops = 0;
    let mut solve_flops_per_adjoint = 0;
    let mut best_factor = f64::INFINITY;
    let mut best_adjoint = f64::INFINITY;

    for _ in 0..reps {
        let start = flops::snapshot();
        let mut factor_secs = 0.0;
        let mut adjoint_secs = 0.0;
        let mut solve_start = flops::snapshot();

        let t = Instant::now();
        let f = LuFactorization::factor(a)?;
        factor_secs += t.elapsed().as_secs_f64();
        let x = f.solve(b)?;

        if reuse {
            solve_start = flops::snapshot();
            let t = Instant::now();
            for s in seeds {
                solve_adjoint(&f, &x, s)?;
            }
            adjoint_secs = t.elapsed().as_secs_f64();
        } else {
            for (i, s) in seeds.iter().enumerate() {
                let t = Instant::now();
                let fresh = LuFactorization::factor(a)?;
                let dt = t.elapsed().as_secs_f64();
                factor_secs += dt;
                adjoint_secs += dt;
                if i == 0 {
                    // Substitution flops only: the refactors above land in
                    // the factor counter, not the solve counter.
                    solve_start = flops::snapshot();
                }
                let t = Instant::now();
                solve_adjoint(&fresh, &x, s)?;
                adjoint_secs += t.elapsed().as_secs_f64();
            }
        }

        let end = flops::snapshot();
        factor_flops = end.delta_since(&start).factor_flops;
        solve_flops_per_adjoint = end.delta_since(&solve_start).solve_flops / k;
        best_factor = best_factor.min(factor_secs);
        best_adjoint = best_adjoint.min(adjoint_secs / k as f64);
    }

    Ok(BenchRecord {
        n: a.rows(),
        factor_flops,
        solve_flops_per_adjoint,
        wall_time_factor: best_factor,
        wall_time_adjoint_solve: best_adjoint,
        reuse,
    })
}

/// Least-squares slope of `ln y` against `ln x`: the growth exponent of a
/// power law through the points.
pub fn fit_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument {
            what: "slope fit needs at least two points".to_string(),
        });
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(Error::InvalidArgument {
            what: "slope fit needs positive coordinates".to_string(),
        });
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let cov: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let var: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if var == 0.0 {
        return Err(Error::InvalidArgument {
            what: "slope fit needs at least two distinct sizes".to_string(),
        });
    }
    Ok(cov / var)
}

/// Fitted exponents from a record set: `(factor, reused adjoint solve)`.
/// Factoring grows like n³; a reused adjoint solve like n².
pub fn fit_exponents(records: &[BenchRecord]) -> Result<(f64, f64)> {
    let reuse: Vec<&BenchRecord> = records.iter().filter(|r| r.reuse).collect();
    let factor: Vec<(f64, f64)> =
        reuse.iter().map(|r| (r.n as f64, r.factor_flops as f64)).collect();
    let solve: Vec<(f64, f64)> = reuse
        .iter()
        .map(|r| (r.n as f64, r.solve_flops_per_adjoint as f64))
        .collect();
    Ok((fit_log_slope(&factor)?, fit_log_slope(&solve)?))
}

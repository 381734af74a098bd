//! The cost argument for adjoint solves, measured in counted flops: an
//! LU factorization is O(n³), but every derivative system it unlocks —
//! tangent, adjoint, second-order — is a pair of triangular substitutions
//! at O(n²). Reusing the factorization turns "k gradients cost k
//! factorizations" into "k gradients cost one".
//!
//! Run with: `cargo run --example factorization_reuse`

use adjblas::cli::{fit_exponents, run_bench, BenchConfig};
use adjblas::Result;

fn main() -> Result<()> {
    let config = BenchConfig {
        sizes: vec![32, 64, 128],
        adjoints: 8,
        reps: 1,
        seed: 42,
    };
    let records = run_bench(&config)?;

    println!(
        "{:>5} {:>6} {:>13} {:>16}",
        "n", "reuse", "factor_flops", "solve_flops/adj"
    );
    for r in &records {
        println!(
            "{:>5} {:>6} {:>13} {:>16}",
            r.n,
            if r.reuse { "yes" } else { "no" },
            r.factor_flops,
            r.solve_flops_per_adjoint
        );
    }

    // With reuse the record pays for one factorization; without, for
    // 1 + k of them (primal plus one per adjoint).
    for pair in records.chunks(2) {
        assert_eq!(pair[1].factor_flops, (1 + config.adjoints as u64) * pair[0].factor_flops);
    }

    // Growth exponents fitted on the reuse records: factoring is cubic,
    // each reused adjoint solve quadratic.
    let (factor_exp, solve_exp) = fit_exponents(&records)?;
    println!("factor exponent        ~ {factor_exp:.3} (cubic)");
    println!("adjoint solve exponent ~ {solve_exp:.3} (quadratic)");
    assert!(factor_exp > 2.8 && factor_exp < 3.2);
    assert!(solve_exp > 1.9 && solve_exp < 2.1);

    Ok(())
}

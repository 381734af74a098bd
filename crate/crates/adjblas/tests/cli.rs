//! End-to-end tests of the `adjblas` binary: exit codes, seed resolution
//! through `ADJBLAS_SEED`, and bytewise round-trips of the machine output
//! formats.

use std::path::Path;
use std::process::{Command, Output};

use adjblas::cli::format::{
    bench_to_csv, bench_to_jsonl, demo_to_json, parse_bench_csv, parse_bench_jsonl,
    parse_demo_json, parse_reports_csv, parse_reports_jsonl, reports_to_csv,
    reports_to_jsonl,
};
use adjblas::dense::{write_matrix, write_vector};
use adjblas::{DenseMatrix, DenseVector};

fn adjblas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adjblas"))
        .args(args)
        .env_remove("ADJBLAS_SEED")
        .output()
        .expect("binary runs")
}

fn adjblas_with_env(args: &[&str], seed_env: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adjblas"))
        .args(args)
        .env("ADJBLAS_SEED", seed_env)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}

fn write_system(dir: &Path) -> (String, String) {
    let a = DenseMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 4.0]]).expect("matrix");
    let b = DenseVector::from_slice(&[2.0, 4.0]).expect("vector");
    let a_path = dir.join("a.txt");
    let b_path = dir.join("b.txt");
    write_matrix(&a_path, &a).expect("writes");
    write_vector(&b_path, &b).expect("writes");
    (
        a_path.to_str().expect("utf-8 path").to_string(),
        b_path.to_str().expect("utf-8 path").to_string(),
    )
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[test]
fn verify_all_passes_with_many_pass_lines() {
    let out = adjblas(&["verify", "--all", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let pass_lines = text.lines().filter(|l| l.ends_with("PASS")).count();
    assert!(pass_lines >= 10, "only {pass_lines} PASS lines:\n{text}");
    assert!(text.contains("16/16 checks passed"));
}

#[test]
fn verify_single_check_reports_only_that_check() {
    let out = adjblas(&["verify", "--check", "solve", "--trials", "200"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("1/1 checks passed"));
    let solve_line = text
        .lines()
        .find(|l| l.starts_with("solve "))
        .expect("a report line for the solve identity check");
    assert!(solve_line.contains("200"));
    assert!(solve_line.ends_with("PASS"));
}

#[test]
fn verify_unknown_check_is_a_usage_error() {
    let out = adjblas(&["verify", "--check", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown check: bogus"), "stderr: {}", stderr(&out));
}

#[test]
fn verify_failure_exits_one() {
    // An impossible tolerance turns an honest roundoff residual into a
    // failure; that is a verification failure (1), not a usage error (2).
    let out = adjblas(&["verify", "--check", "gemm", "--tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn verify_json_and_csv_round_trip_bytewise() {
    let dir = tempfile::tempdir().expect("tempdir");
    let json_path = dir.path().join("reports.jsonl");
    let csv_path = dir.path().join("reports.csv");
    let out = adjblas(&[
        "verify",
        "--seed",
        "7",
        "--json",
        json_path.to_str().expect("utf-8 path"),
        "--csv",
        csv_path.to_str().expect("utf-8 path"),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let json_text = std::fs::read_to_string(&json_path).expect("json written");
    let reports = parse_reports_jsonl(&json_text).expect("json parses");
    assert_eq!(reports.len(), 16);
    assert!(reports.iter().all(|r| r.seed == 7));
    assert_eq!(reports_to_jsonl(&reports), json_text, "JSON re-emit changed bytes");

    let csv_text = std::fs::read_to_string(&csv_path).expect("csv written");
    let from_csv = parse_reports_csv(&csv_text).expect("csv parses");
    assert_eq!(from_csv, reports, "CSV and JSON disagree");
    assert_eq!(reports_to_csv(&from_csv), csv_text, "CSV re-emit changed bytes");
}

#[test]
fn verify_is_reproducible_across_runs() {
    let dir = tempfile::tempdir().expect("tempdir");
    let first = dir.path().join("first.jsonl");
    let second = dir.path().join("second.jsonl");
    for path in [&first, &second] {
        let out = adjblas(&[
            "verify",
            "--check",
            "tape-oracle",
            "--seed",
            "123",
            "--json",
            path.to_str().expect("utf-8 path"),
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    }
    let a = std::fs::read(&first).expect("first written");
    let b = std::fs::read(&second).expect("second written");
    assert_eq!(a, b, "same seed produced different reports");
}

// ---------------------------------------------------------------------------
// seed resolution
// ---------------------------------------------------------------------------

#[test]
fn seed_env_var_is_the_default() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("r.jsonl");
    let out = adjblas_with_env(
        &["verify", "--check", "mul", "--json", path.to_str().expect("utf-8 path")],
        "99",
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let reports =
        parse_reports_jsonl(&std::fs::read_to_string(&path).expect("written"))
            .expect("parses");
    assert_eq!(reports[0].seed, 99);
}

#[test]
fn seed_flag_beats_the_env_var() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("r.jsonl");
    let out = adjblas_with_env(
        &[
            "verify",
            "--check",
            "mul",
            "--seed",
            "5",
            "--json",
            path.to_str().expect("utf-8 path"),
        ],
        "99",
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let reports =
        parse_reports_jsonl(&std::fs::read_to_string(&path).expect("written"))
            .expect("parses");
    assert_eq!(reports[0].seed, 5);
}

#[test]
fn seed_defaults_to_42_without_flag_or_env() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("r.jsonl");
    let out = adjblas(&[
        "verify",
        "--check",
        "mul",
        "--json",
        path.to_str().expect("utf-8 path"),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let reports =
        parse_reports_jsonl(&std::fs::read_to_string(&path).expect("written"))
            .expect("parses");
    assert_eq!(reports[0].seed, 42);
}

#[test]
fn invalid_seed_env_var_is_a_usage_error() {
    let out = adjblas_with_env(&["verify", "--check", "mul"], "not-a-number");
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("ADJBLAS_SEED"), "stderr: {}", stderr(&out));
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

#[test]
fn bench_emits_records_and_exponents() {
    let dir = tempfile::tempdir().expect("tempdir");
    let json_path = dir.path().join("bench.jsonl");
    let csv_path = dir.path().join("bench.csv");
    let out = adjblas(&[
        "bench",
        "--sizes",
        "16,32,64",
        "--adjoints",
        "4",
        "--reps",
        "1",
        "--json",
        json_path.to_str().expect("utf-8 path"),
        "--csv",
        csv_path.to_str().expect("utf-8 path"),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("fitted flop exponents"));

    let json_text = std::fs::read_to_string(&json_path).expect("json written");
    let records = parse_bench_jsonl(&json_text).expect("json parses");
    assert_eq!(records.len(), 6); // reuse + no-reuse per size
    assert_eq!(bench_to_jsonl(&records), json_text, "JSON re-emit changed bytes");

    let csv_text = std::fs::read_to_string(&csv_path).expect("csv written");
    let from_csv = parse_bench_csv(&csv_text).expect("csv parses");
    assert_eq!(from_csv, records);
    assert_eq!(bench_to_csv(&from_csv), csv_text, "CSV re-emit changed bytes");

    // k = 1 accounting identity at the binary level.
    let out = adjblas(&[
        "bench", "--sizes", "8,16", "--adjoints", "1", "--reps", "1", "--json",
        json_path.to_str().expect("utf-8 path"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let records = parse_bench_jsonl(
        &std::fs::read_to_string(&json_path).expect("json written"),
    )
    .expect("parses");
    for pair in records.chunks(2) {
        assert_eq!(pair[1].factor_flops, 2 * pair[0].factor_flops);
    }
}

#[test]
fn bench_small_sizes_run_with_a_caveat() {
    let out = adjblas(&["bench", "--sizes", "2,4", "--adjoints", "1", "--reps", "1"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("note:"), "missing caveat:\n{}", stdout(&out));
}

#[test]
fn bench_rejects_unusable_sizes() {
    let out = adjblas(&["bench", "--sizes", "64"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("at least two sizes"), "stderr: {}", stderr(&out));

    let out = adjblas(&["bench", "--sizes", "1,64"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("at least 2"), "stderr: {}", stderr(&out));
}

// ---------------------------------------------------------------------------
// demo
// ---------------------------------------------------------------------------

#[test]
fn demo_prints_the_diagonal_example() {
    let dir = tempfile::tempdir().expect("tempdir");
    let (a_path, b_path) = write_system(dir.path());
    let seed_path = dir.path().join("seed.txt");
    write_vector(&seed_path, &DenseVector::from_slice(&[1.0, 1.0]).expect("vector"))
        .expect("writes");
    let json_path = dir.path().join("demo.json");

    let out = adjblas(&[
        "demo",
        "--matrix",
        &a_path,
        "--rhs",
        &b_path,
        "--seed-vector",
        seed_path.to_str().expect("utf-8 path"),
        "--json",
        json_path.to_str().expect("utf-8 path"),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("x         = [1, 1]"), "stdout:\n{text}");
    assert!(text.contains("b_adj     = [0.5, 0.25]"), "stdout:\n{text}");
    assert!(text.contains("[-0.5, -0.5]"), "stdout:\n{text}");
    assert!(text.contains("[-0.25, -0.25]"), "stdout:\n{text}");

    let json_text = std::fs::read_to_string(&json_path).expect("json written");
    let parsed = parse_demo_json(&json_text).expect("parses");
    assert_eq!(parsed.x, vec![1.0, 1.0]);
    assert_eq!(parsed.b_adj, vec![0.5, 0.25]);
    assert_eq!(parsed.a_adj, vec![-0.5, -0.25, -0.5, -0.25]); // column-major
    assert_eq!(parsed.b_adj_dot, None);
    assert_eq!(demo_to_json(&parsed), json_text, "JSON re-emit changed bytes");
}

#[test]
fn demo_unit_seed_selects_one_row_sensitivity() {
    let dir = tempfile::tempdir().expect("tempdir");
    let a = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).expect("matrix");
    let b = DenseVector::from_slice(&[3.0, 5.0]).expect("vector");
    let a_path = dir.path().join("a.txt");
    let b_path = dir.path().join("b.txt");
    write_matrix(&a_path, &a).expect("writes");
    write_vector(&b_path, &b).expect("writes");
    let json_path = dir.path().join("demo.json");

    let out = adjblas(&[
        "demo",
        "--matrix",
        a_path.to_str().expect("utf-8 path"),
        "--rhs",
        b_path.to_str().expect("utf-8 path"),
        "--seed-unit",
        "0",
        "--json",
        json_path.to_str().expect("utf-8 path"),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let parsed =
        parse_demo_json(&std::fs::read_to_string(&json_path).expect("json written"))
            .expect("parses");
    // On the identity system: b_adj = e0 and A_adj = -e0 * x^T.
    assert_eq!(parsed.b_adj, vec![1.0, 0.0]);
    assert_eq!(parsed.a_adj, vec![-3.0, 0.0, -5.0, 0.0]);
}

#[test]
fn demo_second_order_outputs_tangents() {
    let dir = tempfile::tempdir().expect("tempdir");
    let (a_path, b_path) = write_system(dir.path());
    let seed_path = dir.path().join("seed.txt");
    write_vector(&seed_path, &DenseVector::from_slice(&[1.0, 1.0]).expect("vector"))
        .expect("writes");
    let a_dot_path = dir.path().join("a_dot.txt");
    write_matrix(
        &a_dot_path,
        &DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).expect("matrix"),
    )
    .expect("writes");
    let b_dot_path = dir.path().join("b_dot.txt");
    write_vector(&b_dot_path, &DenseVector::zeros(2)).expect("writes");
    let json_path = dir.path().join("demo.json");

    let out = adjblas(&[
        "demo",
        "--matrix",
        &a_path,
        "--rhs",
        &b_path,
        "--seed-vector",
        seed_path.to_str().expect("utf-8 path"),
        "--second-order",
        "--a-dot",
        a_dot_path.to_str().expect("utf-8 path"),
        "--b-dot",
        b_dot_path.to_str().expect("utf-8 path"),
        "--json",
        json_path.to_str().expect("utf-8 path"),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("b_adj_dot"));
    let parsed =
        parse_demo_json(&std::fs::read_to_string(&json_path).expect("json written"))
            .expect("parses");
    // Perturbing A_00 on diag(2,4) with x_adj = (1,1): d b_adj = (-1/4, 0).
    let b_adj_dot = parsed.b_adj_dot.expect("second-order field present");
    assert!((b_adj_dot[0] - (-0.25)).abs() < 1e-15);
    assert_eq!(b_adj_dot[1], 0.0);
    assert!(parsed.a_adj_dot.is_some());

    // The tangent flags require --second-order.
    let out = adjblas(&["demo", "--matrix", &a_path, "--rhs", &b_path, "--a-dot", "x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn demo_singular_matrix_is_a_numerical_failure() {
    let dir = tempfile::tempdir().expect("tempdir");
    let a = DenseMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).expect("matrix");
    let b = DenseVector::from_slice(&[1.0, 1.0]).expect("vector");
    let a_path = dir.path().join("a.txt");
    let b_path = dir.path().join("b.txt");
    write_matrix(&a_path, &a).expect("writes");
    write_vector(&b_path, &b).expect("writes");

    let out = adjblas(&[
        "demo",
        "--matrix",
        a_path.to_str().expect("utf-8 path"),
        "--rhs",
        b_path.to_str().expect("utf-8 path"),
        "--seed-unit",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("singular"), "stderr: {}", stderr(&out));
}

#[test]
fn demo_parse_errors_name_the_line() {
    let dir = tempfile::tempdir().expect("tempdir");
    let a_path = dir.path().join("a.txt");
    std::fs::write(&a_path, "2 2\n1.0 2.0\n3.0 oops\n").expect("writes");
    let b_path = dir.path().join("b.txt");
    write_vector(&b_path, &DenseVector::from_slice(&[1.0, 1.0]).expect("vector"))
        .expect("writes");

    let out = adjblas(&[
        "demo",
        "--matrix",
        a_path.to_str().expect("utf-8 path"),
        "--rhs",
        b_path.to_str().expect("utf-8 path"),
        "--seed-unit",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "stderr: {}", stderr(&out));
}

#[test]
fn demo_requires_exactly_one_seed_source() {
    let dir = tempfile::tempdir().expect("tempdir");
    let (a_path, b_path) = write_system(dir.path());

    // Neither source: rejected after the files read fine.
    let out = adjblas(&["demo", "--matrix", &a_path, "--rhs", &b_path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("exactly one of --seed-vector and --seed-unit"),
        "stderr: {}",
        stderr(&out)
    );

    // Both sources: clap-level conflict.
    let seed_path = dir.path().join("seed.txt");
    write_vector(&seed_path, &DenseVector::from_slice(&[1.0, 1.0]).expect("vector"))
        .expect("writes");
    let out = adjblas(&[
        "demo",
        "--matrix",
        &a_path,
        "--rhs",
        &b_path,
        "--seed-vector",
        seed_path.to_str().expect("utf-8 path"),
        "--seed-unit",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Out-of-range unit index.
    let out =
        adjblas(&["demo", "--matrix", &a_path, "--rhs", &b_path, "--seed-unit", "7"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("out of range"), "stderr: {}", stderr(&out));
}

#[test]
fn unknown_flags_are_usage_errors() {
    let out = adjblas(&["demo", "--csv", "somewhere.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let out = adjblas(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

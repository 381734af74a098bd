//! Number formatting and machine-readable emitters/parsers for the CLI.
//!
//! Machine formats (JSON lines and CSV) print floats with 17 significant
//! digits via `{:.16e}`, which round-trips every finite `f64` exactly.
//! Emission is hand-rolled so the byte layout is deterministic: parsing an
//! emitted file and re-emitting it reproduces the input bytes. Parsing
//! leans on `serde_json` for JSON and a small splitter for CSV.
//!
//! Human-readable tables use [`fmt_human`], a 6-significant-digit format
//! in the style of C's `%.6g` (fixed notation near unit scale, scientific
//! otherwise, trailing zeros trimmed).

use serde::{Deserialize, Serialize};

use crate::cli::bench::BenchRecord;
use crate::error::{Error, Result};
use crate::verify::VerificationReport;

/// Full-precision float for machine output: 17 significant digits,
/// scientific notation. Round-trips exactly through `str::parse::<f64>`.
pub fn fmt_machine(v: f64) -> String {
    format!("{v:.16e}")
}

/// Six-significant-digit float for human tables: fixed notation while the
/// exponent is in `[-4, 6)`, scientific outside, trailing zeros trimmed.
pub fn fmt_human(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.5e}");
    let (mant, exp) = sci.split_once('e').expect("{:e} always contains an exponent");
    let exp: i32 = exp.parse().expect("{:e} exponent is an integer");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mant))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn parse_error(line: usize, err: impl std::fmt::Display) -> Error {
    Error::Parse { line, msg: err.to_string() }
}

// ---------------------------------------------------------------------------
// Verification reports
// ---------------------------------------------------------------------------

/// One JSON object per line, one line per report.
pub fn reports_to_jsonl(reports: &[VerificationReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&format!(
            "{{\"check_name\":{},\"residual\":{},\"tolerance\":{},\"passed\":{},\"trials\":{},\"seed\":{}}}\n",
            json_string(&r.check_name),
            fmt_machine(r.residual),
            fmt_machine(r.tolerance),
            r.passed,
            r.trials,
            r.seed,
        ));
    }
    out
}

pub fn parse_reports_jsonl(text: &str) -> Result<Vec<VerificationReport>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| parse_error(i + 1, e)))
        .collect()
}

const REPORT_HEADER: &str = "check_name,residual,tolerance,passed,trials,seed";

/// CSV with a fixed header row.
pub fn reports_to_csv(reports: &[VerificationReport]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.check_name,
            fmt_machine(r.residual),
            fmt_machine(r.tolerance),
            r.passed,
            r.trials,
            r.seed,
        ));
    }
    out
}

pub fn parse_reports_csv(text: &str) -> Result<Vec<VerificationReport>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == REPORT_HEADER => {}
        _ => {
            return Err(parse_error(1, format!("expected header `{REPORT_HEADER}`")));
        }
    }
    let mut reports = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(parse_error(i + 1, format!("expected 6 fields, got {}", f.len())));
        }
        reports.push(VerificationReport {
            check_name: f[0].to_string(),
            residual: f[1].parse().map_err(|e| parse_error(i + 1, e))?,
            tolerance: f[2].parse().map_err(|e| parse_error(i + 1, e))?,
            passed: f[3].parse().map_err(|e| parse_error(i + 1, e))?,
            trials: f[4].parse().map_err(|e| parse_error(i + 1, e))?,
            seed: f[5].parse().map_err(|e| parse_error(i + 1, e))?,
        });
    }
    Ok(reports)
}

// ---------------------------------------------------------------------------
// Bench records
// ---------------------------------------------------------------------------

/// One JSON object per line, one line per record.
pub fn bench_to_jsonl(records: &[BenchRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!(
            "{{\"n\":{},\"factor_flops\":{},\"solve_flops_per_adjoint\":{},\"wall_time_factor\":{},\"wall_time_adjoint_solve\":{},\"reuse\":{}}}\n",
            r.n,
            r.factor_flops,
            r.solve_flops_per_adjoint,
            fmt_machine(r.wall_time_factor),
            fmt_machine(r.wall_time_adjoint_solve),
            r.reuse,
        ));
    }
    out
}

pub fn parse_bench_jsonl(text: &str) -> Result<Vec<BenchRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| parse_error(i + 1, e)))
        .collect()
}

const BENCH_HEADER: &str =
    "n,factor_flops,solve_flops_per_adjoint,wall_time_factor,wall_time_adjoint_solve,reuse";

pub fn bench_to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(BENCH_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n,
            r.factor_flops,
            r.solve_flops_per_adjoint,
            fmt_machine(r.wall_time_factor),
            fmt_machine(r.wall_time_adjoint_solve),
            r.reuse,
        ));
    }
    out
}

pub fn parse_bench_csv(text: &str) -> Result<Vec<BenchRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == BENCH_HEADER => {}
        _ => {
            return Err(parse_error(1, format!("expected header `{BENCH_HEADER}`")));
        }
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(parse_error(i + 1, format!("expected 6 fields, got {}", f.len())));
        }
        records.push(BenchRecord {
            n: f[0].parse().map_err(|e| parse_error(i + 1, e))?,
            factor_flops: f[1].parse().map_err(|e| parse_error(i + 1, e))?,
            solve_flops_per_adjoint: f[2].parse().map_err(|e| parse_error(i + 1, e))?,
            wall_time_factor: f[3].parse().map_err(|e| parse_error(i + 1, e))?,
            wall_time_adjoint_solve: f[4].parse().map_err(|e| parse_error(i + 1, e))?,
            reuse: f[5].parse().map_err(|e| parse_error(i + 1, e))?,
        });
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// Demo output
// ---------------------------------------------------------------------------

/// Everything the demo computes for one system, flattened for output.
/// Vectors are plain entry lists; matrices are column-major entry lists of
/// length `n * n`. The second-order fields are present only when the demo
/// ran with tangent inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoOutput {
    /// System dimension.
    pub n: usize,
    /// Primal solution of `A x = b`.
    pub x: Vec<f64>,
    /// Adjoint of the right-hand side.
    pub b_adj: Vec<f64>,
    /// Adjoint of the matrix, column-major.
    pub a_adj: Vec<f64>,
    /// Tangent of `b_adj` along the supplied input tangents.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_adj_dot: Option<Vec<f64>>,
    /// Tangent of `a_adj`, column-major.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_adj_dot: Option<Vec<f64>>,
}

fn json_array(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| fmt_machine(*v)).collect();
    format!("[{}]", parts.join(","))
}

/// Single JSON object (one line).
pub fn demo_to_json(d: &DemoOutput) -> String {
    let mut out = format!(
        "{{\"n\":{},\"x\":{},\"b_adj\":{},\"a_adj\":{}",
        d.n,
        json_array(&d.x),
        json_array(&d.b_adj),
        json_array(&d.a_adj),
    );
    if let Some(b) = &d.b_adj_dot {
        out.push_str(&format!(",\"b_adj_dot\":{}", json_array(b)));
    }
    if let Some(a) = &d.a_adj_dot {
        out.push_str(&format!(",\"a_adj_dot\":{}", json_array(a)));
    }
    out.push_str("}\n");
    out
}

pub fn parse_demo_json(text: &str) -> Result<DemoOutput> {
    serde_json::from_str(text.trim()).map_err(|e| parse_error(1, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_reports() -> Vec<VerificationReport> {
        vec![
            VerificationReport {
                check_name: "gemm".to_string(),
                residual: 3.5e-16,
                tolerance: 1e-12,
                passed: true,
                trials: 50,
                seed: 42,
            },
            VerificationReport {
                check_name: "solve-adjoint-fd".to_string(),
                residual: 0.0,
                tolerance: 1e-5,
                passed: true,
                trials: 20,
                seed: 7,
            },
        ]
    }

    fn sample_bench() -> Vec<BenchRecord> {
        vec![
            BenchRecord {
                n: 64,
                factor_flops: 174762,
                solve_flops_per_adjoint: 8192,
                wall_time_factor: 1.25e-4,
                wall_time_adjoint_solve: 3.0e-6,
                reuse: true,
            },
            BenchRecord {
                n: 64,
                factor_flops: 2971954,
                solve_flops_per_adjoint: 8192,
                wall_time_factor: 2.1e-3,
                wall_time_adjoint_solve: 1.4e-4,
                reuse: false,
            },
        ]
    }

    #[test]
    fn machine_format_round_trips_exactly() {
        for v in [0.0, -0.0, 1.0, -1.5, 3.5e-16, 1.0 / 3.0, 6.02e23, f64::MIN_POSITIVE] {
            let parsed: f64 = fmt_machine(v).parse().unwrap();
            assert_eq!(parsed.to_bits(), v.to_bits(), "value {v}");
        }
    }

    #[test]
    fn human_format_matches_six_significant_digits() {
        assert_eq!(fmt_human(0.0), "0");
        assert_eq!(fmt_human(1.0), "1");
        assert_eq!(fmt_human(-1.5), "-1.5");
        assert_eq!(fmt_human(123456.7), "123457");
        assert_eq!(fmt_human(1234567.0), "1.23457e6");
        assert_eq!(fmt_human(0.000123456749), "0.000123457");
        assert_eq!(fmt_human(0.0000123), "1.23e-5");
        assert_eq!(fmt_human(3.5e-16), "3.5e-16");
        assert_eq!(fmt_human(2.0 / 3.0), "0.666667");
        assert_eq!(fmt_human(999999.5), "1e6");
    }

    #[test]
    fn report_jsonl_round_trips_bytewise() {
        let text = reports_to_jsonl(&sample_reports());
        let parsed = parse_reports_jsonl(&text).unwrap();
        assert_eq!(parsed, sample_reports());
        assert_eq!(reports_to_jsonl(&parsed), text);
    }

    #[test]
    fn report_csv_round_trips_bytewise() {
        let text = reports_to_csv(&sample_reports());
        let parsed = parse_reports_csv(&text).unwrap();
        assert_eq!(parsed, sample_reports());
        assert_eq!(reports_to_csv(&parsed), text);
    }

    #[test]
    fn bench_jsonl_and_csv_round_trip_bytewise() {
        let jsonl = bench_to_jsonl(&sample_bench());
        let parsed = parse_bench_jsonl(&jsonl).unwrap();
        assert_eq!(parsed, sample_bench());
        assert_eq!(bench_to_jsonl(&parsed), jsonl);

        let csv = bench_to_csv(&sample_bench());
        let parsed = parse_bench_csv(&csv).unwrap();
        assert_eq!(parsed, sample_bench());
        assert_eq!(bench_to_csv(&parsed), csv);
    }

    #[test]
    fn demo_json_round_trips_bytewise() {
        let d = DemoOutput {
            n: 2,
            x: vec![1.0, 1.0],
            b_adj: vec![0.5, 0.25],
            a_adj: vec![-0.5, -0.25, -0.5, -0.25],
            b_adj_dot: None,
            a_adj_dot: None,
        };
        let text = demo_to_json(&d);
        let parsed = parse_demo_json(&text).unwrap();
        assert_eq!(parsed, d);
        assert_eq!(demo_to_json(&parsed), text);

        let with_second = DemoOutput {
            b_adj_dot: Some(vec![3.0, 0.0]),
            a_adj_dot: Some(vec![0.0; 4]),
            ..d
        };
        let text = demo_to_json(&with_second);
        assert_eq!(parse_demo_json(&text).unwrap(), with_second);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_reports_jsonl("{\"check_name\":\"x\"\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");

        let good = reports_to_csv(&sample_reports());
        let bad = good.replace("42", "not-a-number");
        let err = parse_reports_csv(&bad).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");

        let err = parse_bench_csv("wrong,header\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }
}

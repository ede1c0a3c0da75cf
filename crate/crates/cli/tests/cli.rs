//! End-to-end tests that drive the compiled mer-adc binary.

use std::fs;
use std::process::{Command, Output};

const HEADER: &str = "bits,entropy_bits,avg_cycles_binary,avg_cycles_mer,\
avg_cycles_adaptive,expected_len_mer,expected_len_optimal,samples,seed";

fn mer_adc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mer-adc"))
        .args(args)
        // the binary prints anyhow backtraces when this is set in the
        // environment, which would pollute the stderr assertions below
        .env_remove("RUST_BACKTRACE")
        .output()
        .expect("failed to spawn mer-adc")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec()).expect("output is utf-8")
}

/// Data rows of the stdout report, header stripped.
fn report_rows(out: &Output) -> Vec<String> {
    let stdout = text(&out.stdout);
    let mut lines = stdout.lines().skip_while(|l| *l != HEADER);
    assert_eq!(
        lines.next(),
        Some(HEADER),
        "report header missing:\n{stdout}"
    );
    lines.map(str::to_owned).collect()
}

#[test]
fn demo_walks_the_four_code_example() {
    let out = mer_adc(&["--demo"]);
    assert!(out.status.success());
    let stdout = text(&out.stdout);
    assert!(stdout.contains("input pmf over 4 codes: 0.125 0.125 0.25 0.5"));
    assert!(stdout.contains("entropy: 1.75 bits"));
    assert!(stdout.contains("code depths: 3 3 2 1"));
    assert!(stdout.contains("expected cycles per conversion: 1.75 (conventional schedule: 2)"));
}

#[test]
fn tree_dump_precedes_the_report_and_matches_the_golden_file() {
    let out = mer_adc(&[
        "--bits",
        "2",
        "--pmf-inline",
        "0.125,0.125,0.25,0.5",
        "--mode",
        "mer",
        "--samples",
        "0",
        "--dump-tree",
    ]);
    assert!(out.status.success());
    let golden = include_str!("golden/mer_2bit.tree");
    let expected = format!("{golden}\n{HEADER}\n2,1.750000,,,,1.750000,1.750000,0,1\n");
    assert_eq!(text(&out.stdout), expected);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "--bits",
        "3..5",
        "--dist",
        "gaussian",
        "--par-db",
        "12",
        "--mode",
        "all",
        "--samples",
        "2000",
        "--seed",
        "5",
    ];
    let first = mer_adc(&args);
    let second = mer_adc(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(report_rows(&first).len(), 3);
}

#[test]
fn uniform_streams_average_exactly_the_bit_depth() {
    let out = mer_adc(&[
        "--bits",
        "3",
        "--dist",
        "uniform",
        "--mode",
        "mer",
        "--samples",
        "4096",
        "--seed",
        "9",
    ]);
    assert!(out.status.success());
    let rows = report_rows(&out);
    let fields: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(fields[0], "3");
    assert_eq!(fields[3], "3.000000", "avg_cycles_mer in {}", rows[0]);
    assert_eq!(fields[5], "3.000000", "expected_len_mer in {}", rows[0]);
}

#[test]
fn pmf_files_are_renormalized_with_a_note() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hist.txt");
    fs::write(&path, "0.1\n0.1\n0.2\n0.4\n").unwrap();
    let out = mer_adc(&[
        "--bits",
        "2",
        "--pmf-file",
        path.to_str().unwrap(),
        "--mode",
        "mer",
        "--samples",
        "0",
    ]);
    assert!(out.status.success());
    let stderr = text(&out.stderr);
    assert!(stderr.contains("sum to 0.8"), "stderr: {stderr}");
    assert!(stderr.contains("renormalized"), "stderr: {stderr}");
    let rows = report_rows(&out);
    // 0.1/0.1/0.2/0.4 rescales to the 1.75-bit worked distribution
    assert_eq!(rows[0].split(',').nth(5), Some("1.750000"));
}

#[test]
fn malformed_or_missing_pmf_files_fail() {
    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.txt");
    fs::write(&short, "0.5\n0.25\n0.25\n").unwrap();
    let out = mer_adc(&["--bits", "2", "--pmf-file", short.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("holds 3 values; expected a power of two"));

    let missing = dir.path().join("nope.txt");
    let out = mer_adc(&["--bits", "2", "--pmf-file", missing.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("nope.txt"));
}

#[test]
fn oracle_column_is_limited_to_twelve_bits() {
    let out = mer_adc(&[
        "--bits",
        "13",
        "--dist",
        "uniform",
        "--oracle",
        "--samples",
        "10",
    ]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("--oracle supports up to 12 bits"));
}

#[test]
fn deep_rows_leave_the_optimal_cell_empty() {
    let out = mer_adc(&[
        "--bits",
        "13",
        "--dist",
        "uniform",
        "--mode",
        "mer",
        "--samples",
        "16",
    ]);
    assert!(out.status.success());
    assert!(text(&out.stderr).contains("optimal-schedule column skipped at 13 bits"));
    let rows = report_rows(&out);
    let fields: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(fields[0], "13");
    assert_eq!(fields[6], "", "optimal cell should be empty in {}", rows[0]);
    assert_eq!(fields[5], "13.000000");
}

#[test]
fn mixture_weights_must_sum_to_one() {
    let out = mer_adc(&[
        "--bits",
        "3",
        "--dist",
        "mixture",
        "--par-db",
        "10,30",
        "--weights",
        "0.1,0.8",
        "--samples",
        "10",
    ]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("sum to 0.9"));
}

#[test]
fn a_bits_range_emits_one_row_per_depth() {
    let out = mer_adc(&[
        "--bits",
        "2..4",
        "--dist",
        "uniform",
        "--mode",
        "binary",
        "--samples",
        "100",
    ]);
    assert!(out.status.success());
    let rows = report_rows(&out);
    let leading: Vec<&str> = rows.iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(leading, ["2", "3", "4"]);
}

#[test]
fn adaptive_runs_write_sample_csv_and_rebuild_log() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("samples.csv");
    let log = dir.path().join("rebuilds.log");
    let out = mer_adc(&[
        "--bits",
        "3",
        "--dist",
        "uniform",
        "--mode",
        "adaptive",
        "--samples",
        "5000",
        "--seed",
        "4",
        "--window",
        "1024",
        "--csv-out",
        csv.to_str().unwrap(),
        "--log-out",
        log.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let csv = fs::read_to_string(&csv).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("sample_index,x,code,cycles"));
    assert_eq!(lines.clone().count(), 5000);
    for (i, line) in lines.enumerate() {
        let mut fields = line.split(',');
        assert_eq!(fields.next().unwrap(), i.to_string());
        let code: u32 = fields.nth(1).unwrap().parse().unwrap();
        assert!(code < 8);
    }

    let log = fs::read_to_string(&log).unwrap();
    assert!(
        log.lines()
            .next()
            .unwrap()
            .starts_with("rebuild at sample 1024, generation 1"),
        "log: {log}"
    );
    assert!(text(&out.stderr).contains("adaptive post-settle windowed average"));
}

#[test]
fn per_sample_outputs_demand_a_single_depth() {
    let out = mer_adc(&[
        "--bits",
        "2..4",
        "--dist",
        "uniform",
        "--csv-out",
        "/tmp/unused.csv",
        "--samples",
        "10",
    ]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("need a single --bits value"));
}

#[test]
fn distribution_flags_are_cross_checked() {
    let out = mer_adc(&[
        "--bits",
        "3",
        "--dist",
        "uniform",
        "--par-db",
        "5",
        "--samples",
        "10",
    ]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("gaussian and mixture distributions only"));

    let out = mer_adc(&[
        "--bits",
        "3",
        "--pmf-inline",
        "0.125,0.125,0.25,0.5",
        "--samples",
        "0",
    ]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("is a 2-bit distribution; pass --bits 2"));

    let out = mer_adc(&[
        "--bits",
        "3",
        "--dist",
        "uniform",
        "--mode",
        "mer",
        "--log-out",
        "/tmp/unused.log",
        "--samples",
        "10",
    ]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("--log-out needs the adaptive engine"));
}

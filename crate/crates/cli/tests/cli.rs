use std::process::{Command, Output};

use rough_heston_cli::report::{DiagnosticReport, KernelReport, PriceReport, TableReport};
use serde::de::DeserializeOwned;
use serde::Serialize;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rough-heston"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn config_file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    std::io::Write::write_all(&mut f, text.as_bytes()).unwrap();
    f
}

/// Parse, re-emit and compare with the original bytes.
fn assert_round_trip<T: Serialize + DeserializeOwned>(json: &str) -> T {
    let parsed: T = serde_json::from_str(json).unwrap();
    let again = serde_json::to_string_pretty(&parsed).unwrap() + "\n";
    assert_eq!(again, json);
    parsed
}

fn csv_records(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .collect::<Result<_, _>>()
        .unwrap()
}

fn num(field: &str) -> f64 {
    field.parse().unwrap()
}

#[test]
fn empty_n_list_is_a_usage_error() {
    assert_eq!(cli(&["table", "--n-list"]).status.code(), Some(2));
    assert_eq!(cli(&["table", "--n-list", ""]).status.code(), Some(2));
    assert_eq!(cli(&["table"]).status.code(), Some(2));
}

#[test]
fn config_errors_exit_with_two() {
    let f = config_file("[payoff]\ntype = \"variance_call\"\nstrike = 0.02\n");
    let o = cli(&["--config", f.path().to_str().unwrap(), "price", "--paths", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("payoff.strike"));

    let f = config_file("[mc]\nsteps = 0\n");
    assert_eq!(cli(&["--config", f.path().to_str().unwrap(), "price"]).status.code(), Some(2));
    assert_eq!(cli(&["--config", "/no/such/file.toml", "price"]).status.code(), Some(2));
    assert_eq!(cli(&["diagnose", "--check", "holder", "--steps", "100"]).status.code(), Some(2));
}

#[test]
fn path_faults_exit_with_one() {
    let f = config_file("[model]\nnu = 1e200\nlambda = 0.0\n");
    let o = cli(&["--config", f.path().to_str().unwrap(), "price", "--paths", "50", "--steps", "20"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("faulted"));
}

#[test]
fn json_and_csv_carry_identical_values() {
    let base = ["--seed", "7", "table", "--n-list", "4,16", "--paths", "500"];
    let json = stdout(&cli(&[&base[..], &["--out", "json"]].concat()));
    let csv = stdout(&cli(&[&base[..], &["--out", "csv"]].concat()));
    let table: TableReport = assert_round_trip(&json);
    let records = csv_records(&csv);
    assert_eq!(records.len(), table.rows.len());
    for (row, rec) in table.rows.iter().zip(&records) {
        assert_eq!(rec[0].to_string(), row.scheme.as_str());
        assert_eq!(num(&rec[1]) as usize, row.n);
        assert_eq!(num(&rec[2]), row.mean);
        assert_eq!(num(&rec[3]), row.stat_error);
        assert_eq!(num(&rec[4]), row.ci_low);
        assert_eq!(num(&rec[5]), row.ci_high);
    }
}

#[test]
fn price_report_round_trips_and_ignores_worker_count() {
    let one = stdout(&cli(&["--seed", "3", "--workers", "1", "price", "--paths", "400", "--steps", "20"]));
    let two = stdout(&cli(&["--seed", "3", "--workers", "2", "price", "--paths", "400", "--steps", "20"]));
    let a: PriceReport = assert_round_trip(&one);
    let b: PriceReport = assert_round_trip(&two);
    assert_eq!((a.mean, a.stat_error), (b.mean, b.stat_error));
    assert_eq!(a.seed, 3);
}

#[test]
fn diagnostics_and_kernel_reports_round_trip() {
    let holder = stdout(&cli(&["diagnose", "--check", "holder", "--steps", "64", "--paths", "1000"]));
    assert!(matches!(assert_round_trip::<DiagnosticReport>(&holder), DiagnosticReport::Holder(_)));
    let inv = stdout(&cli(&[
        "diagnose", "--check", "invariants", "--scheme", "volterra", "--steps", "32", "--paths", "200",
    ]));
    match assert_round_trip::<DiagnosticReport>(&inv) {
        DiagnosticReport::Invariants(r) => assert!(r.clean()),
        other => panic!("unexpected report {other:?}"),
    }
    let kernel = stdout(&cli(&["validate-kernel", "--steps", "32,64"]));
    let k: KernelReport = assert_round_trip(&kernel);
    assert_eq!(k.sweep.reports.len(), 2);
}

#[test]
fn reference_table_row_comes_first() {
    let f = config_file("[payoff]\ntype = \"variance_swap\"\n");
    let csv = stdout(&cli(&[
        "--config",
        f.path().to_str().unwrap(),
        "--out",
        "csv",
        "table",
        "--n-list",
        "8",
        "--paths",
        "200",
        "--reference",
    ]));
    let records = csv_records(&csv);
    assert_eq!(&records[0][0], "reference");
    assert!((num(&records[0][2]) - 0.028295).abs() < 5e-6);
    assert_eq!(&records[0][3], "");
    assert_eq!(records.len(), 3);
}

#[test]
fn benchmark_table_integrated_row_at_n_320() {
    // Integrated scheme, n = 320, 10^5 paths: 0.056897 with standard error 0.000225.
    let json = stdout(&cli(&["table", "--n-list", "320", "--paths", "100000"]));
    let table: TableReport = serde_json::from_str(&json).unwrap();
    let row = table
        .rows
        .iter()
        .find(|r| r.scheme == rough_heston::SchemeKind::Integrated)
        .unwrap();
    assert!((row.mean - 0.056897).abs() <= 2.0 * 0.000225, "{}", row.mean);
}

//! End-to-end runs of the binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_momentgate"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Data lines of a CSV document as maps from column to cell.
fn csv_rows(text: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let cols: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
    lines.map(|l| cols.iter().cloned().zip(l.split(',').map(str::to_string)).collect()).collect()
}

fn get(row: &[(String, String)], col: &str) -> f64 {
    row.iter().find(|(c, _)| c == col).unwrap().1.parse().unwrap()
}

#[test]
fn theory_row_at_e4() {
    let out = stdout(&run(&["theory", "--model", "logweibull:rho=2", "--n", "54.598"]));
    assert!(out.starts_with("# momentgate="));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 1);
    assert!((get(&rows[0], "qc_exact") - 3.5).abs() < 1e-5);
    assert!((get(&rows[0], "qc_approx") - 4.0).abs() < 1e-5);
}

#[test]
fn exact_quantiles_give_qc_four() {
    let n = std::f64::consts::E.powi(4);
    let path = tmp("exact.txt");
    let mut text = format!("# model=logweibull:rho=2, n={n:.17e}\n");
    for i in 1..=5 {
        text.push_str(&format!("{:.17e}\n", (n / i as f64).ln().sqrt()));
    }
    std::fs::write(&path, text).unwrap();
    let out = stdout(&run(&["estimate", "--input", path.to_str().unwrap(), "--k-theta", "1"]));
    let row = &csv_rows(&out)[0];
    assert!((get(row, "theta_hat") - 2.0).abs() < 1e-12);
    assert!((get(row, "rho_hat") - 2.0).abs() < 1e-12);
    assert!((get(row, "qc_hat") - 4.0).abs() < 1e-12);
    assert_eq!(get(row, "k_rho"), 5.0);
}

#[test]
fn sample_round_trips_into_estimate() {
    let path = tmp("sample.txt");
    let o = run(&["sample", "--model", "slep:rho=1.5", "--n", "2000", "--seed", "9", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# seed=9, model=slep:rho=1.5, n=2000"));
    assert_eq!(text.lines().count(), 2001);
    let out = stdout(&run(&["estimate", "--input", path.to_str().unwrap()]));
    let row = &csv_rows(&out)[0];
    assert_eq!(get(row, "n"), 2000.0);
    assert_eq!(get(row, "k_theta"), 33.0);
    assert!(get(row, "qc_hat").is_finite());
    // The same seed reproduces the file byte for byte.
    let again = stdout(&run(&["sample", "--model", "slep:rho=1.5", "--n", "2000", "--seed", "9"]));
    assert_eq!(again, text);
}

#[test]
fn log_input_matches_log_values() {
    let y = tmp("y.txt");
    let x = tmp("x.txt");
    let values: Vec<f64> = (0..300).map(|i| 0.5 + ((i * 37) % 101) as f64 / 17.0).collect();
    std::fs::write(&y, values.iter().map(|v| format!("{v:.17e}\n")).collect::<String>()).unwrap();
    std::fs::write(&x, values.iter().map(|v| format!("{:.17e}\n", v.exp())).collect::<String>()).unwrap();
    let a = csv_rows(&stdout(&run(&["estimate", "--input", y.to_str().unwrap()])))[0].clone();
    let b = csv_rows(&stdout(&run(&["estimate", "--input", x.to_str().unwrap(), "--log-input"])))[0].clone();
    assert!((get(&a, "qc_hat") - get(&b, "qc_hat")).abs() < 1e-10 * get(&a, "qc_hat").abs());
}

#[test]
fn synth_then_corrected_estimate() {
    let path = tmp("series.txt");
    let o = run(&[
        "synth", "--model", "lognormal", "--cov", "exp:tau=20", "--n", "8192", "--seed", "4", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().next().unwrap().contains("cov=exp:tau=20"));
    let out = stdout(&run(&[
        "estimate", "--input", path.to_str().unwrap(), "--corr", "--tau", "20", "--k-theta", "10", "--k-rho", "50",
        "--s", "2",
    ]));
    let row = &csv_rows(&out)[0];
    assert!((get(row, "n_used") - 8192.0 / 2.6).abs() < 1e-9);
    assert_eq!(get(row, "s"), 2.0);
    assert!(get(row, "qc_hat") > 0.0);
}

#[test]
fn mc_smoke_and_formats_agree() {
    let csv = stdout(&run(&["mc", "--figure", "3", "--reps", "50"]));
    assert!(csv.contains("# reps=50"));
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 3 * 9 * 3);
    let cols: Vec<&str> = rows[0].iter().map(|(c, _)| c.as_str()).collect();
    for c in ["model", "k_theta", "estimator", "bias", "relative_bias", "variance", "mse", "relative_mse", "cov_theta_rho", "failures"] {
        assert!(cols.contains(&c), "{c}");
    }
    let json: Value = serde_json::from_str(&stdout(&run(&["mc", "--figure", "3", "--reps", "50", "--format", "json"]))).unwrap();
    let jrows = json["rows"].as_array().unwrap();
    assert_eq!(jrows.len(), rows.len());
    for (c, j) in rows.iter().zip(jrows) {
        for (col, cell) in c {
            let v = &j[col];
            let text = match v {
                Value::String(s) => s.clone(),
                Value::Null => String::new(),
                other => other.to_string(),
            };
            assert_eq!(&text, cell, "column {col}");
        }
    }
    assert_eq!(json["header"]["reps"], "50");
}

#[test]
fn mc_config_file_and_propagation() {
    let path = tmp("small.toml");
    std::fs::write(
        &path,
        "[experiment]\nkind = \"iid\"\nmodels = [\"logweibull:rho=2\"]\nn = [1000]\nreps = 100\nseed = 3\n",
    )
    .unwrap();
    let out = stdout(&run(&["mc", "--config", path.to_str().unwrap(), "--propagation"]));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 1);
    assert!(get(&rows[0], "bias_exact_gap") < 1e-10);
    assert!(get(&rows[0], "variance_gap") < 1e-8);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["theory", "--model", "weibull", "--n", "10"]).status.code(), Some(2));
    assert_eq!(run(&["theory", "--model", "lognormal", "--n", "1"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["mc", "--figure", "4"]).status.code(), Some(2));
    let bad = tmp("bad.txt");
    std::fs::write(&bad, "1.0\nnot-a-number\n").unwrap();
    let o = run(&["estimate", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("not a number"));
    assert_eq!(run(&["estimate", "--input", "/nonexistent/file"]).status.code(), Some(4));
    // Equal values make the regression degenerate.
    let flat = tmp("flat.txt");
    std::fs::write(&flat, "# n=100\n3.0\n3.0\n3.0\n").unwrap();
    assert_eq!(run(&["estimate", "--input", flat.to_str().unwrap()]).status.code(), Some(3));
    let o = bin().args(["mc", "--figure", "3", "--reps", "2"]).env("MOMENTGATE_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

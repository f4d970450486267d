use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qnormal3d"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV table, without `#` lines or the header.
fn rows(o: &Output) -> Vec<Vec<String>> {
    let text = stdout(o);
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    r.records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn eval_semicircle_peak() {
    let o = run(&["eval", "fN", "--q", "0", "--grid", "-2:2:5"]);
    assert!(o.status.success());
    let r = rows(&o);
    assert_eq!(r.len(), 5);
    assert!((num(&r[2][1]) - 1.0 / std::f64::consts::PI).abs() < 1e-15);
    assert_eq!(num(&r[0][1]), 0.0);
    assert!(stdout(&o).contains("# q: 0\n"));
}

#[test]
fn eval_all_forms_agree() {
    for args in [
        ["eval", "fZ", "--form", "all", "--grid", "-1:1:7"],
        ["eval", "f3D", "--form", "all", "--grid", "-1:1:5"],
    ] {
        let o = run(&args);
        assert!(o.status.success(), "{args:?}");
        assert!(rows(&o).iter().all(|r| r.last().unwrap() == "true"), "{args:?}");
    }
}

#[test]
fn json_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let o = run(&[
        "eval",
        "fR",
        "--beta",
        "0.4",
        "--grid",
        "0:1:3",
        "--format",
        "json",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["metadata"]["beta"], "0.4");
}

#[test]
fn bad_parameters_exit_2() {
    assert_eq!(run(&["eval", "fN", "--q", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "fN", "--rho", "0.3,0.4,1.2"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "fN", "--grid", "0:1"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "fCN", "--q", "0.5", "--y", "5"]).status.code(), Some(2));
    assert_eq!(run(&["check", "nonsense"]).status.code(), Some(2));
}

#[test]
fn too_few_samples_exit_4() {
    assert_eq!(run(&["sample", "--n", "10", "--summary"]).status.code(), Some(4));
}

#[test]
fn marginal_variance_at_q_zero() {
    let o = run(&["moments", "--kind", "var_z", "--r", "0.5", "--q", "0"]);
    assert!(o.status.success());
    let r = &rows(&o)[0];
    assert_eq!(num(&r[4]), 1.5);
    assert!((num(&r[5]) - 1.5).abs() < 1e-8);
}

#[test]
fn conditional_moment_forms() {
    let o = run(&["moments", "--kind", "cond_x", "--n", "3", "--y", "0.5", "--z", "-0.8"]);
    assert!(o.status.success());
    let r = rows(&o);
    assert_eq!(r.len(), 3);
    for row in &r {
        assert!(num(&row[6]) < 1e-8, "{row:?}");
    }
}

#[test]
fn gram_diagonal_matches_norms() {
    let o = run(&["gram", "--family", "qhermite", "--nmax", "4", "--q", "0.5"]);
    assert!(o.status.success());
    let expected = [1.0, 1.0, 1.5, 2.625, 4.921875];
    for (i, r) in rows(&o).iter().enumerate() {
        assert!((num(&r[i + 1]) - expected[i]).abs() < 1e-10, "{r:?}");
        assert_eq!(num(&r[6]), expected[i]);
    }
}

#[test]
fn sampling_is_reproducible() {
    let args = ["sample", "--n", "50", "--seed", "9", "--burn-in", "20"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(rows(&a).len(), 50);
    let c = run(&["sample", "--n", "50", "--seed", "10", "--burn-in", "20"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn check_reports_and_passes() {
    let o = run(&["check", "limits", "--q", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&o);
    assert!(!r.is_empty());
    assert!(r.iter().all(|row| row[10] == "true" || row[11] == "false"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0 failed"));
}

#[test]
fn limits_table_decreases() {
    let o = run(&["limits", "--qs", "0.9,0.99,0.999"]);
    assert!(o.status.success());
    let r = rows(&o);
    assert_eq!(r.len(), 15);
    assert!(r.iter().all(|row| row[3] == "true"));
}

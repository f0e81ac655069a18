use std::process::{Command, Output};

fn ou_pairs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ou-pairs"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn field(csv: &str, row: usize, name: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines
        .nth(row)
        .unwrap()
        .split(',')
        .nth(idx)
        .unwrap()
        .to_string()
}

#[test]
fn optimize_with_risk_bound() {
    let o = ou_pairs(&["optimize", "--cost", "1", "--v0", "0.05"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let v: f64 = field(&out, 0, "variance_rate").parse().unwrap();
    assert!((v - 0.05).abs() <= 1e-6);
    let a: f64 = field(&out, 0, "a").parse().unwrap();
    let b: f64 = field(&out, 0, "b").parse().unwrap();
    assert_eq!(a, -b);
    assert_eq!(field(&out, 0, "constraint_active"), "true");
}

#[test]
fn negative_cost_is_a_validation_error() {
    let o = ou_pairs(&["optimize", "--cost", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("--cost"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
    assert!(o.stdout.is_empty());
}

#[test]
fn frontier_table() {
    let o = ou_pairs(&["frontier", "--cost", "0.2", "--points", "100"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 101);
    assert_eq!(lines[0], "a,variance_rate,profit_rate");
    assert_eq!(lines[1], "0.1,0.0,0.0");
    assert_eq!(
        ou_pairs(&["frontier", "--cost", "0.2", "--points", "1"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn general_parametrization_outputs() {
    let o = ou_pairs(&[
        "optimize", "--cost", "0.0015", "--mu", "1", "--tau", "10", "--sigma2", "0.0001",
        "--format", "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let a_tilde = v[0]["a_tilde"].as_f64().unwrap();
    let b_tilde = v[0]["b_tilde"].as_f64().unwrap();
    assert!((a_tilde + b_tilde - 2.0).abs() < 1e-12);
    assert!(a_tilde > 1.0);

    let partial = ou_pairs(&["optimize", "--cost", "1", "--mu", "1", "--tau", "2"]);
    assert_eq!(partial.status.code(), Some(1));
    assert!(stderr(&partial).contains("--sigma2"));
}

#[test]
fn misspec_tables() {
    let o = ou_pairs(&["misspec", "--believed-mu", "1.0005", "--points", "5"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(
        out.lines().next().unwrap(),
        "v0_general,believed_V,believed_Pi,realized_V,realized_Pi"
    );
    assert_eq!(out.lines().count(), 6);

    let single = ou_pairs(&[
        "misspec",
        "--believed-sigma2",
        "1.5e-4",
        "--v0-general",
        "1e-6",
    ]);
    assert!(single.status.success());
    let out = stdout(&single);
    assert_eq!(field(&out, 0, "constraint_active"), "true");
    let realized: f64 = field(&out, 0, "realized_V").parse().unwrap();
    assert!(realized < 1e-6);
}

#[test]
fn simulate_reports_analytic_and_simulated() {
    let o = ou_pairs(&[
        "simulate", "--a", "0.5", "--b", "-0.5", "--cost", "0.2", "--reps", "200", "--seed", "1",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(
        out.lines().next().unwrap(),
        "quantity,analytic,simulated,stderr"
    );
    assert_eq!(field(&out, 0, "quantity"), "profit_rate");
    assert_eq!(field(&out, 0, "analytic"), "0.6118296067646615");

    let bad = ou_pairs(&["simulate", "--a", "0.1", "--b", "0.5"]);
    assert_eq!(bad.status.code(), Some(1));

    let starved = ou_pairs(&[
        "simulate",
        "--a",
        "3",
        "--b",
        "-3",
        "--reps",
        "2",
        "--horizon",
        "10",
        "--max-steps",
        "5",
    ]);
    assert_eq!(starved.status.code(), Some(2), "{}", stderr(&starved));
}

#[test]
fn estimate_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    // Deterministic mean-reverting spread around 0.3 on top of a trending B.
    let mut body = String::from("s,A,B\n");
    let mut x: f64 = 0.0;
    for i in 0..400 {
        x = 0.3 + (x - 0.3) * 0.9 + 0.05 * ((i * 7919 % 101) as f64 / 50.0 - 1.0);
        let b = 10.0 + 0.01 * i as f64;
        body.push_str(&format!("{},{},{}\n", i, x + 2.0 * b, b));
    }
    std::fs::write(&path, &body).unwrap();
    let p = path.to_str().unwrap();

    let o = ou_pairs(&["estimate", "--input", p, "--eta", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["eta"], 2.0);
    assert_eq!(v["n_obs"], 400);
    assert!(v["params"]["tau"].as_f64().unwrap() > 0.0);

    let csv = ou_pairs(&["estimate", "--input", p, "--fit-eta", "--format", "csv"]);
    assert!(csv.status.success());
    assert!(stdout(&csv).starts_with("mu,tau,sigma2,eta,"));

    let both = ou_pairs(&["estimate", "--input", p, "--fit-eta", "--eta", "1"]);
    assert_eq!(both.status.code(), Some(1));

    let broken = dir.path().join("bad.csv");
    std::fs::write(&broken, "s,A,B\n0,1,1\n1,x,1\n2,1,1\n").unwrap();
    let o = ou_pairs(&["estimate", "--input", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let missing = ou_pairs(&["estimate", "--input", "/nonexistent.csv"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn output_file_and_thread_variable() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let o = ou_pairs(&[
        "optimize",
        "--cost",
        "0.2",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.starts_with("a,b,profit_rate,variance_rate"));

    let bad = Command::new(env!("CARGO_BIN_EXE_ou-pairs"))
        .args(["optimize", "--cost", "1"])
        .env("OU_PAIRS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("OU_PAIRS_THREADS"));
}

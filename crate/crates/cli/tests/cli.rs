use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_delaunay4"));
    c.env_remove("DELAUNAY4_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn rows(csv_text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let body = r
        .records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect();
    (header, body)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["constants", "--n", "4"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["orbits", "--a", "0.01a0"]).status.code(), Some(2));
    assert_eq!(run(&["orbits", "--a", "1.5a0"]).status.code(), Some(2));
    assert_eq!(
        run(&["fit", "--input", "/nonexistent/x.csv"]).status.code(),
        Some(3)
    );
    assert_eq!(
        run(&["constants", "-o", "/nonexistent/dir/out.csv"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(run(&["selftest"]).status.code(), Some(0));
}

#[test]
fn csv_uses_seventeen_significant_digits() {
    let (header, body) = rows(&ok(&["constants"]));
    let a0 = &body[0][col(&header, "a0")];
    assert_eq!(a0, "8.3578358781326267e-1");
    let mantissa = a0.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn json_has_meta_and_rows() {
    let v: serde_json::Value =
        serde_json::from_str(&ok(&["orbits", "--count", "3", "--format", "json"])).unwrap();
    assert_eq!(v["meta"]["command"]["command"], "orbits");
    assert_eq!(v["meta"]["command"]["grid"]["count"], 3);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for key in [
        "a", "b", "period", "energy", "p_cyl", "p_sph", "residual", "status",
    ] {
        assert!(rows[0].get(key).is_some(), "missing {key}");
    }
}

#[test]
fn orbit_table_properties() {
    let (h, body) = rows(&ok(&["orbits", "--a-min", "0.2a0", "--count", "6"]));
    let f = |r: &Vec<String>, k: &str| r[col(&h, k)].parse::<f64>().unwrap();
    let periods: Vec<f64> = body.iter().map(|r| f(r, "period")).collect();
    assert!(periods.windows(2).all(|w| w[1] < w[0]), "{periods:?}");
    for r in &body[..5] {
        assert!(f(r, "energy") < 0.0 && f(r, "residual") < 1e-7);
        assert_eq!(r[col(&h, "degenerate")], "false");
    }
    let last = body.last().unwrap();
    assert_eq!(f(last, "b"), 0.0);
    assert_eq!(last[col(&h, "degenerate")], "true");
    assert!((f(last, "period") - 5.042_965_529_746_393).abs() < 1e-12);
}

#[test]
fn spectrum_and_bands() {
    let (h, body) = rows(&ok(&["spectrum", "--a", "0.6a0", "--j", "0,1"]));
    assert_eq!(body.len(), 2);
    assert_eq!(body[0][col(&h, "jordan_rank")], "1");
    let (h, body) = rows(&ok(&[
        "bands",
        "--j",
        "0",
        "--sigma-min",
        "0",
        "--sigma-max",
        "0",
        "--sigma-count",
        "1",
    ]));
    assert_eq!(body[0][col(&h, "in_band")], "true");
}

#[test]
fn profile_fit_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("v.csv");
    let d = data.to_str().unwrap();
    ok(&[
        "profile",
        "--kind",
        "deformed",
        "--a",
        "0.6a0",
        "--x0",
        "0.1,0,0,0,0",
        "-o",
        d,
    ]);
    assert!(Path::new(&format!("{d}.grid.json")).exists());
    let (h, body) = rows(&ok(&["fit", "--input", d]));
    let f = |k: &str| body[0][col(&h, k)].parse::<f64>().unwrap();
    assert!((f("a_over_a0") - 0.6).abs() < 1e-6);
    assert!((f("x0_0") - 0.1).abs() < 1e-4);
    assert!((f("beta0") - 1.0).abs() < 0.1, "beta0 {}", f("beta0"));
    assert!((f("beta1") - 2.0).abs() < 0.2, "beta1 {}", f("beta1"));
}

#[test]
fn thread_environment_override() {
    let out = bin()
        .env("DELAUNAY4_THREADS", "many")
        .args(["constants"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let args = ["orbits", "--count", "5"];
    let one = bin()
        .env("DELAUNAY4_THREADS", "1")
        .args(args)
        .output()
        .unwrap();
    let four = bin()
        .env("DELAUNAY4_THREADS", "4")
        .args(args)
        .output()
        .unwrap();
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
    let flag = run(&["--threads", "2", "orbits", "--count", "5"]);
    assert_eq!(flag.stdout, one.stdout);
}

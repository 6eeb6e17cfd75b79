use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use jsrlab_core::AnalysisReport;

fn jsrlab(args: &[&str]) -> Output {
    jsrlab_env(args, &[])
}

fn jsrlab_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_jsrlab"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn examples() -> (TempDir, PathBuf, PathBuf) {
    let dir = TempDir::new().unwrap();
    let out = jsrlab(&["examples", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (a, b) = (dir.path().join("example1.json"), dir.path().join("example2.json"));
    (dir, a, b)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn examples_are_stable_and_reparse() {
    let (dir, a, b) = examples();
    let first = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let out = jsrlab(&["examples", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(first, (fs::read(&a).unwrap(), fs::read(&b).unwrap()));
    for path in [&a, &b] {
        let text = fs::read_to_string(path).unwrap();
        jsrlab_core::SystemSpec::from_json(&text).unwrap().validate().unwrap();
    }
    let v: Value = serde_json::from_slice(&first.0).unwrap();
    assert_eq!(v["matrices"][2], serde_json::json!([[0.0, -0.5], [1.0, 0.0]]));
}

#[test]
fn jsr_examples() {
    let (_dir, a, b) = examples();
    let out = jsrlab(&["jsr", p(&a)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["rho_d"]["lower"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((v["rho_d"]["upper"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let out = jsrlab(&["jsr", p(&b), "--norm", "one", "--horizon", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["rho_d"]["lower"].as_f64(), Some(1.0));
    assert_eq!(v["rho_d"]["upper"].as_f64(), Some(1.0));
    assert_eq!(v["rho_d"]["horizon"].as_u64(), Some(3));
    assert_eq!(v["config"]["norm"], "one");
}

#[test]
fn prob_examples() {
    let (_dir, a, b) = examples();
    let v = json(&jsrlab(&["prob", p(&a)]));
    for x in v["rho_p"]["curve"]["values"].as_array().unwrap() {
        assert!((x.as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
    let out = jsrlab(&["prob", p(&b), "--horizon", "8", "--norm", "one"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let curve = &v["rho_p"]["curve"];
    for (n, x) in curve["horizons"]
        .as_array()
        .unwrap()
        .iter()
        .zip(curve["values"].as_array().unwrap())
    {
        let n = n.as_u64().unwrap() as i32;
        if n >= 2 {
            assert!((x.as_f64().unwrap() - 3.0 * 0.5f64.powi(n)).abs() < 1e-12);
        }
    }
    let mc = &v["rho_p"]["mc"];
    assert_eq!(mc["n"].as_u64(), Some(8));
    assert_eq!(mc["samples"].as_u64(), Some(1000));
}

#[test]
fn seeded_reports_are_byte_identical() {
    let (_dir, _a, b) = examples();
    let args = ["prob", p(&b), "--seed", "42", "--mc-samples", "500"];
    let one = jsrlab_env(&args, &[("JSRLAB_THREADS", "1")]);
    let four = jsrlab_env(&args, &[("JSRLAB_THREADS", "4")]);
    let again = jsrlab(&args);
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, again.stdout);
    let other = jsrlab(&["prob", p(&b), "--seed", "43", "--mc-samples", "500"]);
    assert_ne!(json(&one)["rho_p"]["mc"], json(&other)["rho_p"]["mc"]);
}

#[test]
fn equality_examples() {
    let (dir, a, b) = examples();
    let v = json(&jsrlab(&["equality", p(&a)]));
    assert_eq!(v["cycles"]["verdict"]["status"], "consistent_up_to");
    assert_eq!(v["distinct_cycle"]["witness"]["word"], serde_json::json!([1]));
    let ratio = &v["ratio"];
    assert!(ratio["low"].as_f64().unwrap() <= 1.0 && ratio["high"].as_f64().unwrap() >= 1.0 - 1e-9);

    let v = json(&jsrlab(&["equality", p(&b)]));
    assert_eq!(v["cycles"]["verdict"]["status"], "violated");
    assert!(v["distinct_cycle"]["witness"].is_null());

    let no_chain = write(&dir, "bare.json", r#"{"dim": 1, "matrices": [[[2.0]], [[0.5]]]}"#);
    let out = jsrlab(&["equality", p(&no_chain)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v.get("cycles").is_none());
    assert_eq!(v["distinct_cycle"]["witness"]["word"], serde_json::json!([1]));
}

#[test]
fn finiteness_examples() {
    let (dir, _a, b) = examples();
    let v = json(&jsrlab(&["finiteness", p(&b), "--max-word-len", "3"]));
    assert_eq!(v["finiteness"]["witness"], serde_json::json!([1, 1, 2]));
    assert_eq!(v["finiteness"]["order"].as_u64(), Some(3));
    assert_eq!(v["finiteness"]["status"], "certified");

    let single = write(&dir, "one.json", r#"{"dim": 2, "matrices": [[[0.5, 1], [0, 0.25]]]}"#);
    let v = json(&jsrlab(&["finiteness", p(&single)]));
    assert_eq!(v["finiteness"]["witness"], serde_json::json!([1]));
    assert_eq!(v["finiteness"]["order"].as_u64(), Some(1));

    let out = jsrlab(&[
        "finiteness",
        p(&b),
        "--max-word-len",
        "3",
        "--budget",
        "1",
        "--horizon",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&out);
    assert_eq!(v["finiteness"]["status"], "candidate");
    assert_eq!(v["budget_exhausted"], true);
}

#[test]
fn lift_output_reparses() {
    let dir = TempDir::new().unwrap();
    let spec = r#"{
        "dim": 1,
        "matrices": [[[1.0]], [[0.5]]],
        "higher_order": {
            "m": 2,
            "p_entries": [
                {"indices": [1, 1, 2], "value": 1.0},
                {"indices": [1, 2, 1], "value": 1.0},
                {"indices": [2, 1, 1], "value": 1.0},
                {"indices": [2, 2, 1], "value": 1.0}
            ],
            "nu_entries": [
                {"indices": [1, 1], "value": 0.3333333333333333},
                {"indices": [1, 2], "value": 0.3333333333333333},
                {"indices": [2, 1], "value": 0.3333333333333334}
            ]
        }
    }"#;
    let path = write(&dir, "order2.json", spec);
    let out = jsrlab(&["lift", p(&path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["lift"]["states"], serde_json::json!([[1, 1], [1, 2], [2, 1], [2, 2]]));
    let lifted = serde_json::to_string(&v["lift"]["system"]).unwrap();
    let lifted_path = write(&dir, "lifted.json", &lifted);

    let direct = json(&jsrlab(&["prob", p(&path), "--mc-samples", "0", "--horizon", "6"]));
    let via = json(&jsrlab(&[
        "prob",
        p(&lifted_path),
        "--mc-samples",
        "0",
        "--horizon",
        "6",
    ]));
    let (x, y) = (&direct["rho_p"]["curve"]["values"], &via["rho_p"]["curve"]["values"]);
    for (a, b) in x.as_array().unwrap().iter().zip(y.as_array().unwrap()) {
        assert!((a.as_f64().unwrap() - b.as_f64().unwrap()).abs() < 1e-12);
    }

    let out = jsrlab(&["lift", p(&lifted_path)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_round_trip() {
    let (_dir, a, b) = examples();
    for path in [&a, &b] {
        let out = jsrlab(&["report", p(path)]);
        assert_eq!(out.status.code(), Some(0));
        let text = String::from_utf8(out.stdout).unwrap();
        let report = AnalysisReport::from_json(&text).unwrap();
        assert_eq!(report.to_json_pretty() + "\n", text);
        assert_eq!(report.command, "report");
        assert_eq!(report.input.as_deref(), Some(p(path)));
        assert!(report.finiteness.is_some() && report.ratio.is_some());
    }
}

#[test]
fn exit_codes_on_bad_input() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("truncated.json", "{\"dim\": 2, \"matrices\": [[[1, 0], [0, 1]]"),
        ("not_json.json", "matrices: 1"),
        ("ragged.json", r#"{"dim": 2, "matrices": [[[1, 0], [0]]]}"#),
        ("dim.json", r#"{"dim": 3, "matrices": [[[1, 0], [0, 1]]]}"#),
        ("empty.json", r#"{"dim": 1, "matrices": []}"#),
        ("nan.json", r#"{"dim": 1, "matrices": [[["x"]]]}"#),
        ("unknown.json", r#"{"dim": 1, "matrices": [[[1]]], "extra": true}"#),
        (
            "rows.json",
            r#"{"dim": 1, "matrices": [[[1]], [[2]]], "chain": {"P": [[0.5, 0.4], [0, 1]]}}"#,
        ),
        (
            "nu.json",
            r#"{"dim": 1, "matrices": [[[1]], [[2]]], "chain": {"P": [[0, 1], [1, 0]], "nu": [1, 0]}}"#,
        ),
        (
            "shape.json",
            r#"{"dim": 1, "matrices": [[[1]], [[2]]], "chain": {"P": [[1]]}}"#,
        ),
    ];
    for (name, text) in cases {
        let path = write(&dir, name, text);
        for cmd in ["jsr", "prob", "equality"] {
            let out = jsrlab(&[cmd, p(&path)]);
            assert_eq!(out.status.code(), Some(2), "{cmd} {name}");
            assert!(out.stdout.is_empty(), "{cmd} {name}");
            let err = String::from_utf8_lossy(&out.stderr);
            assert!(err.contains(name), "{cmd} {name}: {err}");
        }
    }
    let out = jsrlab(&["jsr", p(&dir.path().join("truncated.json"))]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    let out = jsrlab(&["jsr", p(&dir.path().join("ragged.json"))]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("matrices[0][1]"));

    let missing = jsrlab(&["jsr", p(&dir.path().join("missing.json"))]);
    assert_eq!(missing.status.code(), Some(2));

    let bare = write(&dir, "bare.json", r#"{"dim": 1, "matrices": [[[1]]]}"#);
    assert_eq!(jsrlab(&["prob", p(&bare)]).status.code(), Some(2));
    assert_eq!(jsrlab(&["jsr", p(&bare), "--horizon", "0"]).status.code(), Some(2));
    assert_eq!(jsrlab(&["jsr", p(&bare), "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(jsrlab(&["jsr", p(&bare), "--norm", "frobenius"]).status.code(), Some(2));
    assert_eq!(
        jsrlab_env(&["jsr", p(&bare)], &[("JSRLAB_THREADS", "zero")])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn budget_exhaustion_still_reports() {
    let dir = TempDir::new().unwrap();
    let jordan = write(&dir, "jordan.json", r#"{"dim": 2, "matrices": [[[1, 1], [0, 1]]]}"#);
    let out = jsrlab(&["jsr", p(&jordan), "--budget", "50", "--horizon", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&out);
    assert_eq!(v["budget_exhausted"], true);
    assert!(v["rho_d"]["upper"].as_f64().unwrap() > 1.0);
}

#[test]
fn stdin_input() {
    let (_dir, a, _b) = examples();
    let text = fs::read(&a).unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_jsrlab"))
        .args(["jsr", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    use std::io::Write;
    child.stdin.take().unwrap().write_all(&text).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["input"], "-");
}

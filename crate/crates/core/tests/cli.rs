//! End-to-end runs of the `valgebra` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_valgebra")).args(args).output().expect("spawn valgebra")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p: PathBuf = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const CUBE3: &str = r#"{"dim":3,"vertices":[[0,0,0],[1,0,0],[0,1,0],[0,0,1],[1,1,0],[1,0,1],[0,1,1],[1,1,1]]}"#;
const SQUARE_PSI: &str =
    r#"{"dim":2,"degree":1,"terms":[{"weight":1,"bodies":[{"dim":2,"vertices":[[0,0],[1,0],[0,1],[1,1]]}]}]}"#;

#[test]
fn mixed_volume_of_cubes_is_one_in_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "cube.json", CUBE3);
    let bodies = format!("{c},{c},{c}");
    for mode in ["float", "exact"] {
        let o = run(&["mixed-volume", "--bodies", &bodies, "--arith", mode]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let out = stdout(&o);
        assert!(out.contains(&format!("# arithmetic: {mode}")), "{out}");
        assert!(out.contains("# conv_mode: unit_normalized"), "{out}");
        assert_eq!(out.lines().last(), Some("1"));
    }
}

#[test]
fn malformed_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"dim\":3,\"vertices\":[[0,0");
    let o = run(&["mixed-volume", "--bodies", &format!("{bad},{bad},{bad}")]);
    assert_eq!(o.status.code(), Some(2));
    let bad_literal = write(dir.path(), "lit.json", r#"{"dim":2,"vertices":[["1/0",0],[1,1],[0,1]]}"#);
    let o = run(&["mixed-volume", "--bodies", &format!("{bad_literal},{bad_literal}")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn precondition_violations_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "cube.json", CUBE3);
    let o = run(&["mixed-volume", "--bodies", &format!("{c},{c}")]);
    assert_eq!(o.status.code(), Some(3));
    let singular = write(dir.path(), "m.json", r#"{"dim":2,"rows":[[1,2],[2,4]]}"#);
    let o = run(&["dyndeg", "--matrix", &singular, "--codeg", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn non_convergence_exits_4_with_partial_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let psi = write(dir.path(), "psi.json", SQUARE_PSI);
    let out = dir.path().join("sol.json");
    let o = run(&[
        "minkowski",
        "--valuation",
        &psi,
        "--max-iters",
        "2",
        "--starts",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["converged"], Value::Bool(false));
    assert!(v["B"].is_object() && v["trace"].is_array() && v["residuals"].is_object());
}

#[test]
fn vanishing_refusal_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", r#"{"dim":2,"rows":[[2,0],[0,2]]}"#);
    let o = run(&["vanishing", "--matrix", &m, "--degree", "1"]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn minkowski_solution_embeds_body_constant_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let psi = write(dir.path(), "psi.json", SQUARE_PSI);
    let o = run(&["minkowski", "--valuation", &psi, "--starts", "2", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["c"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(v["meta"]["conv_mode"], "unit_normalized");
    assert!(v["meta"]["reference"].as_str().unwrap().starts_with("ball"));
}

#[test]
fn dyndeg_csv_is_deterministic_and_has_columns() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", r#"{"dim":2,"rows":[[3,0],[0,2]]}"#);
    let args = ["dyndeg", "--matrix", &m, "--codeg", "1", "--kmax", "12", "--seed", "5"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.lines().next().unwrap().starts_with('#'));
    assert!(text.contains("k,raw_degree,kth_root,fekete,spectral,rel_error"), "{text}");
    assert!(text.contains("unit-cube-d2"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 13);
}

#[test]
fn config_file_supplies_flags_and_cli_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", r#"{"dim":2,"rows":[[3,0],[0,2]]}"#);
    let cfg = write(dir.path(), "cfg.json", r#"{"kmax": 5, "conv_mode": "paper"}"#);
    let o = run(&["dyndeg", "--config", &cfg, "--matrix", &m, "--codeg", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let t = stdout(&o);
    assert_eq!(t.lines().filter(|l| !l.starts_with('#')).count(), 6);
    assert!(t.contains("paper"));
    let o = run(&["dyndeg", "--config", &cfg, "--matrix", &m, "--codeg", "1", "--kmax", "4"]);
    assert_eq!(stdout(&o).lines().filter(|l| !l.starts_with('#')).count(), 5);
}

#[test]
fn verify_suite_passes_for_seed_7() {
    let o = run(&["verify-suite", "--seed", "7", "--dims", "2,3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().any(|l| l.starts_with("PASS")));
}

#[test]
fn thread_cap_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "cube.json", CUBE3);
    let bodies = format!("{c},{c},{c}");
    let one = Command::new(env!("CARGO_BIN_EXE_valgebra"))
        .args(["mixed-volume", "--bodies", &bodies])
        .env("VALGEBRA_THREADS", "1")
        .output()
        .unwrap();
    let many = run(&["mixed-volume", "--bodies", &bodies]);
    assert_eq!(one.stdout, many.stdout);
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const EX1: &str = r#"{"M": 3, "coflows": [
 {"id": 1, "flows": [{"src":1,"dst":4,"vol":3},{"src":2,"dst":5,"vol":3},{"src":3,"dst":6,"vol":3}]},
 {"id": 2, "flows": [{"src":1,"dst":4,"vol":1},{"src":1,"dst":5,"vol":1},{"src":3,"dst":5,"vol":1},{"src":3,"dst":6,"vol":1}]}
]}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coflowctl")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn ex1(dir: &Path) -> PathBuf {
    let path = dir.join("ex1.json");
    fs::write(&path, EX1).unwrap();
    path
}

#[test]
fn mps_reports_both_phi_modes() {
    let dir = tempfile::tempdir().unwrap();
    let path = ex1(dir.path());
    let p = path.to_str().unwrap();
    let unit = json(&["mps", p, "--exact"]);
    assert_eq!(unit["slowdown"], "5/3");
    assert_eq!(unit["ranking"], serde_json::json!([2, 1]));
    let volume = json(&["mps", p, "--exact", "--phi", "volume"]);
    assert_eq!(volume["slowdown"], "10");
}

#[test]
fn feascheck_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let path = ex1(dir.path());
    let p = path.to_str().unwrap();
    let ok = json(&["feascheck", p, "--E", "5/3", "--exact", "--order", "2,1"]);
    assert_eq!(ok["feasible"], true);
    let wrong_order = json(&["feascheck", p, "--E", "5/3", "--exact", "--order", "[1,2]"]);
    assert_eq!(wrong_order["feasible"], false);
    let tight = json(&["feascheck", p, "--E", "3/2", "--exact"]);
    assert_eq!(tight["feasible"], false);
    assert_eq!(tight["violation"]["prefix_time"], "5");
}

#[test]
fn cofair_prints_order_and_audit() {
    let dir = tempfile::tempdir().unwrap();
    let path = ex1(dir.path());
    let v = json(&["cofair", path.to_str().unwrap(), "--exact"]);
    assert_eq!(v["order"], serde_json::json!([2, 1]));
    assert_eq!(v["certificate"][0]["y"], "1/3");
    assert_eq!(v["audit"]["passed"], true);
    assert_eq!(v["audit"]["dual_objective"], "5");
    assert_eq!(v["audit"]["primal_objective"], "7");

    let below = json(&["cofair", path.to_str().unwrap(), "--exact", "--E", "3/2"]);
    assert_eq!(below["feasible"], false);
}

#[test]
fn simulate_emits_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = ex1(dir.path());
    let p = path.to_str().unwrap();
    let out = run(&["simulate", p, "--order", "2,1", "--exact", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("coflow,cct"));
    assert!(lines.next().unwrap().starts_with("1,5,3,"));
    assert!(lines.next().unwrap().starts_with("2,2,2,"));

    let v = json(&["simulate", p, "--order", "[2,1]", "--trace"]);
    assert!(v.to_string().contains("trace"));
}

#[test]
fn oracle_finds_the_shared_target() {
    let dir = tempfile::tempdir().unwrap();
    let path = ex1(dir.path());
    let v = json(&["oracle", "min-slowdown", path.to_str().unwrap(), "--dt", "1/4", "--tol", "1e-3"]);
    assert_eq!(v["min_slowdown_exact"], "5/3");
}

#[test]
fn gen_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = run(&["gen", "wn", "--N", "12", "--M", "5", "--q", "0.25", "--seed", "9", "--out", path.to_str().unwrap()]);
        assert!(out.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let batch: Value = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
    let coflows = batch["coflows"].as_array().unwrap();
    assert_eq!(coflows.len(), 12);
    assert_eq!(coflows.iter().filter(|c| c["flows"].as_array().unwrap().len() > 1).count(), 3);

    let mr = run(&["gen", "mr", "--N", "3", "--M", "4", "--m", "2", "--r", "2", "--seed", "1"]);
    assert!(mr.status.success());
    assert!(run(&["gen", "mr", "--N", "3", "--M", "4", "--seed", "1"]).status.code() == Some(2));
}

#[test]
fn experiment_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"source": {"generate": {"kind": "wn", "q": 0.2, "N": 8, "M": 6, "seed": 3}},
            "repetitions": 3,
            "schedulers": [{"name": "cofair", "multiplier": 1.0}, {"name": "sincronia"}]}"#,
    )
    .unwrap();
    let mut csvs = Vec::new();
    for (k, jobs) in ["1", "3"].iter().enumerate() {
        let out_dir = dir.path().join(format!("out{k}"));
        let out = run(&["experiment", "run", spec.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--jobs", jobs]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csvs.push(fs::read(out_dir.join("results.csv")).unwrap());
        let summary: Value = serde_json::from_slice(&fs::read(out_dir.join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["instances"], 3);
    }
    assert_eq!(csvs[0], csvs[1]);
    let text = String::from_utf8(csvs.remove(0)).unwrap();
    assert_eq!(text.lines().next().unwrap(), "instance,scheduler,coflow,cct,c0,slowdown,si");
    assert_eq!(text.lines().count(), 1 + 3 * 2 * 8);
}

#[test]
fn bad_input_exits_with_two() {
    let out = run(&["mps", "/nonexistent/batch.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

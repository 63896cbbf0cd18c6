use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const K3: &str = "c triangle\np edge 3 3\ne 1 2\ne 2 3\ne 1 3\n";
const K4: &str = "p edge 4 6\ne 1 2\ne 1 3\ne 1 4\ne 2 3\ne 2 4\ne 3 4\n";

fn unitdist(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unitdist"))
        .args(args)
        .current_dir(dir)
        .env_remove("UNITDIST_EPS_LEN")
        .env_remove("UNITDIST_EPS_SEP")
        .output()
        .expect("binary runs")
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn setup() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("k3.col"), K3).unwrap();
    std::fs::write(dir.path().join("k4.col"), K4).unwrap();
    std::fs::write(dir.path().join("c.json"), "{\"0\": 0, \"1\": 1, \"2\": 2}").unwrap();
    dir
}

#[test]
fn reduce_triangle_counts_and_manifest() {
    let dir = setup();
    let out = unitdist(dir.path(), &["reduce", "--dim", "3", "-i", "k3.col", "-o", "h.json"]);
    assert_eq!(out.status.code(), Some(0));
    let h = json(dir.path(), "h.json");
    assert_eq!(h["vertices"], 23);
    assert_eq!(h["edges"].as_array().unwrap().len(), 43);
    let m = json(dir.path(), "h.json.manifest.json");
    assert_eq!(m["dimension"], 3);
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn witness_verify_extract_round_trip() {
    let dir = setup();
    let p = dir.path();
    assert!(unitdist(p, &["reduce", "-i", "k3.col", "-o", "h.json"]).status.success());
    let w = ["witness", "-i", "k3.col", "--coloring", "c.json", "--seed", "7"];
    assert!(unitdist(p, &[&w[..], &["-o", "a.json"]].concat()).status.success());
    assert!(unitdist(p, &[&w[..], &["-o", "b.json"]].concat()).status.success());
    assert_eq!(std::fs::read(p.join("a.json")).unwrap(), std::fs::read(p.join("b.json")).unwrap());
    assert_eq!(json(p, "a.json.manifest.json")["seed"], 7);

    let v = unitdist(p, &["verify", "-i", "h.json", "-e", "a.json", "--non-critical"]);
    assert_eq!(v.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&v.stdout).unwrap();
    assert!(report["residual"].as_f64().unwrap() < 1e-9);

    let x = unitdist(p, &["extract", "-i", "h.json", "-e", "a.json", "-o", "back.json"]);
    assert!(x.status.success());
    assert_eq!(json(p, "back.json"), json(p, "c.json"));
}

#[test]
fn verify_bad_embedding_exits_one() {
    let dir = setup();
    let p = dir.path();
    assert!(unitdist(p, &["reduce", "-i", "k3.col", "-o", "h.json"]).status.success());
    assert!(unitdist(p, &["witness", "-i", "k3.col", "--coloring", "c.json", "--seed", "1", "-o", "e.json"])
        .status
        .success());
    let mut e = json(p, "e.json");
    e["coords"][0][0] = Value::from(e["coords"][0][0].as_f64().unwrap() + 0.25);
    std::fs::write(p.join("bad.json"), e.to_string()).unwrap();
    let out = unitdist(p, &["verify", "-i", "h.json", "-e", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["counts"]["edge_length"].as_u64().unwrap() > 0);
    assert!(!report["violations"].as_array().unwrap().is_empty());
}

#[test]
fn input_errors_exit_two_with_json() {
    let dir = setup();
    let p = dir.path();
    std::fs::write(p.join("oob.col"), "p edge 2 1\ne 1 3\n").unwrap();
    for args in [&["oracle", "-i", "oob.col"][..], &["oracle", "-i", "missing.col"], &["frobnicate"]] {
        let out = unitdist(p, args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err: Value = serde_json::from_slice(&out.stderr).unwrap();
        assert!(err["error"]["kind"].is_string());
    }
    let bad_col = std::fs::read_to_string(p.join("c.json")).unwrap().replace("\"2\": 2", "\"2\": 1");
    std::fs::write(p.join("c_bad.json"), bad_col).unwrap();
    let out = unitdist(p, &["witness", "-i", "k3.col", "--coloring", "c_bad.json", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "InvalidColoring");
}

#[test]
fn tolerance_override_from_env() {
    let dir = setup();
    let out = Command::new(env!("CARGO_BIN_EXE_unitdist"))
        .args(["spindle", "-o", "s.json"])
        .current_dir(dir.path())
        .env("UNITDIST_EPS_SEP", "1e-4")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(json(dir.path(), "s.json.manifest.json")["tolerance"]["eps_sep"], 1e-4);
    let out = Command::new(env!("CARGO_BIN_EXE_unitdist"))
        .args(["spindle"])
        .env("UNITDIST_EPS_SEP", "-1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spindle_embeds() {
    let dir = setup();
    let p = dir.path();
    assert!(unitdist(p, &["spindle", "--dim", "3", "-o", "s.json"]).status.success());
    let out = unitdist(p, &["embed", "-i", "s.json", "--restarts", "40", "--seed", "3", "-o", "r.json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(p, "r.json");
    assert_eq!(r["verdict"], "embedding_found");
    assert!(r["residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn oracle_and_check_on_k4() {
    let dir = setup();
    let p = dir.path();
    let out = unitdist(p, &["oracle", "-i", "k4.col"]);
    assert!(out.status.success());
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["colorable"], false);

    let out = unitdist(p, &["--threads", "1", "check", "-i", "k4.col", "--dim", "3", "--seed", "2", "-o", "k.json"]);
    assert_eq!(out.status.code(), Some(0));
    let k = json(p, "k.json");
    assert_eq!(k["summary"], "not 3-colorable; pipeline consistent");
    assert_eq!(k["rejections"]["rejected"], 81);
    assert_eq!(k["solver"]["verdict"], "no_embedding_found_heuristic");
    assert!(k["solver"]["note"].as_str().unwrap().contains("heuristic"));
}

#[test]
fn rod_command() {
    let dir = setup();
    let out = unitdist(dir.path(), &["rod", "--dim", "3", "--min", "0.3", "--max", "0.4", "-o", "r.json"]);
    assert!(out.status.success());
    let r = json(dir.path(), "r.json");
    assert_eq!(r["vertices"], 244);
    let len = r["rod"]["length_value"].as_f64().unwrap();
    assert!((len - 0.39539994230919523).abs() < 1e-12);
}

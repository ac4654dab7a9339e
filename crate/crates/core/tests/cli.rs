use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cli(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hclust-cert"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn line_instance(dir: &Path) -> String {
    let path = dir.join("line.json");
    fs::write(&path, r#"{"n": 4, "dist": [1, 10, 9, 11, 10, 1]}"#).unwrap();
    path.display().to_string()
}

#[test]
fn generate_adversary_writes_instance_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["generate", "adversary", "--k", "5", "--B", "100", "--eps", "1"]);
    assert!(out.status.success());
    let inst: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("adversary-k5.json")).unwrap()).unwrap();
    assert_eq!(inst["n"], 9);
    let side: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("adversary-k5.target.json")).unwrap()).unwrap();
    assert_eq!(side["target"][0], serde_json::json!([0, 1]));
}

#[test]
fn generate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let read = |seed: &str| {
        assert!(cli(dir.path(), &["--seed", seed, "generate", "euclidean", "--n", "12", "--dim", "2"]).status.success());
        fs::read_to_string(dir.path().join(format!("euclidean-n12-d2-s{seed}.json"))).unwrap()
    };
    assert_eq!(read("7"), read("7"));
    assert_ne!(read("7"), read("8"));
    assert!(cli(dir.path(), &["--seed", "1", "generate", "metric", "--n", "10"]).status.success());
}

#[test]
fn run_line_example() {
    let dir = tempfile::tempdir().unwrap();
    let inst = line_instance(dir.path());
    let out = cli(dir.path(), &["run", "--instance", &inst, "--method", "CL", "--k", "2"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["scores"]["max_diam"], 1.0);
    assert_eq!(v["clustering"], serde_json::json!([[0, 1], [2, 3]]));
    let mm = json(&cli(dir.path(), &["run", "--instance", &inst, "--method", "MM", "--k", "4"]));
    assert_eq!(mm["scores"]["max_radius"], 0.0);
}

#[test]
fn certify_writes_traces_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = line_instance(dir.path());
    let out = cli(dir.path(), &["certify", "--instance", &inst, "--k", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["violations"], serde_json::json!([]));
    assert_eq!(r["certificates"]["alg2"]["failed"], 0);
    for suffix in ["report", "forest", "graph", "dendrogram"] {
        assert!(dir.path().join(format!("line-CL-k2.{suffix}.json")).exists(), "{suffix}");
    }
}

#[test]
fn certify_separates_single_from_complete() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cli(dir.path(), &["generate", "adversary", "--k", "5", "--B", "100", "--eps", "1"]).status.success());
    let inst = dir.path().join("adversary-k5.json").display().to_string();
    let side = dir.path().join("adversary-k5.target.json").display().to_string();
    let ratio = |m: &str| {
        let out = cli(
            dir.path(),
            &["certify", "--instance", &inst, "--k", "5", "--method", m, "--target", "file", "--target-file", &side],
        );
        assert!(out.status.success());
        let r = json(&out);
        r["achieved"]["max_diam"].as_f64().unwrap() / r["target"]["alg1_avg_diam"].as_f64().unwrap()
    };
    assert!(ratio("SL") > ratio("CL"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = line_instance(dir.path());
    assert_eq!(cli(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(cli(dir.path(), &["run", "--instance", &inst, "--method", "XX", "--k", "2"]).status.code(), Some(2));
    let guard = cli(dir.path(), &["--n-max-oracle", "3", "oracle", "--instance", &inst, "--k", "2"]);
    assert_eq!(guard.status.code(), Some(4));
    let ok = cli(dir.path(), &["oracle", "--instance", &inst, "--k", "2", "--cross-check"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["opt_dm"], 1.0);
}

#[test]
fn assertion_failure_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    // Not a metric: complete linkage is trapped into {0, 1, 2} while {0, 2}, {1, 3} has diameter 2.
    let trap = dir.path().join("trap.json");
    fs::write(&trap, r#"{"n": 4, "dist": [1, 2, 100, 100, 2, 100]}"#).unwrap();
    let out = cli(dir.path(), &["certify", "--instance", trap.to_str().unwrap(), "--k", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("failures.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "certify");
    assert!(!manifest["failures"][0]["violations"].as_array().unwrap().is_empty());
}

#[test]
fn bad_target_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let inst = line_instance(dir.path());
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "[[0, 1], [2]]").unwrap();
    let out = cli(
        dir.path(),
        &["certify", "--instance", &inst, "--k", "2", "--target", "file", "--target-file", bad.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("failures.json").exists());
}

#[test]
fn inequalities_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["--seed", "3", "inequalities", "--samples", "1000", "--i-max", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("inequalities.csv")).unwrap();
    assert!(csv.starts_with("inequality,kind,inputs,lhs,rhs,slack"));
    assert_eq!(json(&out)["alpha_sup"]["argmax"], 4);
}

#[test]
fn sweep_is_byte_identical_and_handles_empty_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.toml");
    fs::write(&cfg, "generator = \"metric\"\nn = 8\nseed_count = 3\nks = [2, 3]\n").unwrap();
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = cli(&out_dir, &["sweep", "--config", cfg.to_str().unwrap()]);
        assert!(out.status.success());
        fs::read_to_string(out_dir.join("sweep.csv")).unwrap()
    };
    let a = run("a");
    assert_eq!(a.lines().count(), 1 + 3 * 2 * 4);
    assert_eq!(a, run("b"));
    assert!(dir.path().join("a/instances/metric-n8-s0.json").exists());
    assert!(dir.path().join("a/dendrograms/metric-n8-s0-CL.json").exists());

    fs::write(&cfg, "generator = \"euclidean\"\nn = 8\nseed_count = 3\nks = []\n").unwrap();
    assert_eq!(run("c").lines().count(), 1);
}

use std::path::Path;
use std::process::{Command, Output};

fn boge(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boge"))
        .args(args)
        .current_dir(dir)
        .env_remove("BOGE_OUT_DIR")
        .output()
        .unwrap()
}

fn error_kind(out: &Output) -> String {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().rev().find(|l| l.contains("\"error\"")).expect("error line");
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    v["error"]["kind"].as_str().unwrap().to_string()
}

fn stage(dir: &Path) {
    let steps: [&[&str]; 3] = [
        &["gen-design", "--family", "2", "--index", "1", "--seed", "4", "--out", "design.json"],
        &["mesh", "--design", "design.json", "--size", "2", "--out", "mesh.txt"],
        &["solve", "--mesh", "mesh.txt", "--load", "500", "--angle", "1.5707963", "--out", "sol.txt"],
    ];
    for args in steps {
        let out = boge(dir, args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn stages_chain_and_metrics_of_identical_files_are_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    stage(dir);
    let out = boge(dir, &["metrics", "--pred", "sol.txt", "--truth", "sol.txt", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("m.json")).unwrap()).unwrap();
    assert_eq!(report["mse"], 0.0);
    assert_eq!(report["mape"], 0.0);

    let out = boge(dir, &["embed", "--mesh", "mesh.txt", "--target", "sol.txt", "--load", "500", "--angle", "0", "--mode", "conventional", "--out", "g.jsonl"]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.join("g.jsonl")).unwrap();
    let g: boge::boge::GraphSample = serde_json::from_str(text.trim_end()).unwrap();
    assert_eq!(g.features[0].len(), boge::boge::FEATURE_LEN);
}

#[test]
fn render_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    stage(dir);
    for name in ["a.svg", "b.svg"] {
        let out = boge(dir, &["render", "--mesh", "mesh.txt", "--field", "sol.txt", "--out", name]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(dir.join("a.svg")).unwrap();
    assert_eq!(a, std::fs::read(dir.join("b.svg")).unwrap());
    assert!(a.starts_with(b"<svg"));
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = boge(dir, &["gen-design", "--family", "1", "--set", "no_such_key=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "usage");

    let out = boge(dir, &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(dir.join("bad.cfg"), "per_family = many\n").unwrap();
    let out = boge(dir, &["dataset", "--config", "bad.cfg"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pipeline_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = boge(dir, &["solve", "--mesh", "missing.txt", "--load", "100", "--angle", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "mesh");

    std::fs::write(dir.join("a.txt"), "1 2 3").unwrap();
    std::fs::write(dir.join("b.txt"), "1 2").unwrap();
    let out = boge(dir, &["metrics", "--pred", "a.txt", "--truth", "b.txt"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn out_dir_defaults_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_boge"))
        .args(["gen-design", "--family", "5"])
        .current_dir(tmp.path())
        .env("BOGE_OUT_DIR", tmp.path().join("env-out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("env-out/design.json").is_file());
}

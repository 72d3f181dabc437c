use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rte(args: &[&str], config: Option<&Path>, out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rte"));
    cmd.args(args);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    if let Some(o) = out {
        cmd.arg("--out").arg(o);
    }
    cmd.output().unwrap()
}

fn workdir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("cli_{name}"));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// Writes a four-node ring topology and a config referring to it by relative path.
fn fixture(dir: &Path, traffic: &str) -> PathBuf {
    fs::write(
        dir.join("ring.json"),
        r#"{"directed": false, "num_nodes": 4, "edges": [
            {"src": 0, "dst": 1, "capacity": 4}, {"src": 1, "dst": 2, "capacity": 4},
            {"src": 2, "dst": 3, "capacity": 4}, {"src": 3, "dst": 0, "capacity": 4}]}"#,
    )
    .unwrap();
    let config = dir.join("config.json");
    fs::write(
        &config,
        format!(
            r#"{{"topology": "ring.json", "k": 2, "h": 2, "traffic": {traffic},
                 "schemes": [{{"kind": "omniscient"}}, {{"kind": "prediction"}}],
                 "output": "out"}}"#
        ),
    )
    .unwrap();
    config
}

const GRAVITY: &str = r#"{"gravity": {"total": 8, "count": 24, "jitter": 0.1}}"#;

#[test]
fn help_and_usage_errors() {
    assert_eq!(rte(&["--help"], None, None).status.code(), Some(0));
    assert_eq!(rte(&[], None, None).status.code(), Some(1));
    assert_eq!(rte(&["bogus"], None, None).status.code(), Some(1));
    assert_eq!(rte(&["perturb", "--alphas", "x"], None, None).status.code(), Some(1));
}

#[test]
fn config_problems_exit_with_one() {
    let dir = workdir("config");
    let missing = rte(&["eval"], None, None);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--config"));
    assert_eq!(rte(&["eval"], Some(&dir.join("absent.json")), None).status.code(), Some(1));
    let bad = dir.join("bad.json");
    fs::write(&bad, "{not json").unwrap();
    assert_eq!(rte(&["eval"], Some(&bad), None).status.code(), Some(1));
}

#[test]
fn bad_trace_data_exits_with_two() {
    let dir = workdir("data");
    fs::write(dir.join("trace.csv"), "0,1,1,1\n1,0,-1,1\n").unwrap();
    let config = fixture(&dir, r#"{"trace": "trace.csv"}"#);
    let out = rte(&["characterize"], Some(&config), None);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn paths_synth_and_characterize_write_outputs() {
    let dir = workdir("outputs");
    let config = fixture(&dir, GRAVITY);
    for cmd in ["paths", "synth"] {
        let out = rte(&[cmd], Some(&config), None);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = rte(&["characterize", "--window", "4"], Some(&config), None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let outdir = dir.join("out");
    let paths: serde_json::Value = serde_json::from_str(&fs::read_to_string(outdir.join("paths.json")).unwrap()).unwrap();
    assert!(paths.is_object() || paths.is_array());
    let trace = fs::read_to_string(outdir.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 24);
    assert_eq!(trace.lines().next().unwrap().split(',').count(), 16);
    let cosine = fs::read_to_string(outdir.join("cosine.csv")).unwrap();
    assert_eq!(cosine.lines().count(), 1 + 20);
    assert!(outdir.join("variance.csv").exists());
}

#[test]
fn eval_honors_out_and_seed_overrides() {
    let dir = workdir("eval");
    let config = fixture(&dir, GRAVITY);
    let run = |name: &str, seed: &str| {
        let out = dir.join(name);
        let o = rte(&["eval", "--seed", seed], Some(&config), Some(&out));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out.join("eval_normalized.csv")).unwrap()
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "1"));
    assert_ne!(a, run("c", "2"));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("a/eval_summary.json")).unwrap()).unwrap();
    assert!(summary.to_string().contains("prediction"));
}

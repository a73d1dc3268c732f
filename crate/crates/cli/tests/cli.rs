use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_persistence-lab"));
    cmd.args(args).env_remove("PERSISTENCE_LAB_OUT");
    if let Some(p) = env_out {
        cmd.env("PERSISTENCE_LAB_OUT", p);
    }
    cmd.output().expect("spawn")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

const SMALL: &str = r#"{
    "name": "small",
    "model": { "family": "srw", "params": { "half_width": 1024, "functional": { "kind": "identity" } } },
    "seed": 3,
    "replicas": 2000,
    "passage": { "horizon": 1000.0, "fit": { "window": [1.0, 316.22776601683796] } }
}"#;

#[test]
fn builtins_validate() {
    for e in ["e1", "e2", "e3", "e4", "e5", "e6", "e7", "e8"] {
        let o = lab(&["validate", e], None);
        assert!(o.status.success(), "{e}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(json(&o)["valid"], true);
    }
}

#[test]
fn theory_prints_exponents() {
    let o = lab(&["theory", "skew_bessel", "delta=1", "eta=0", "gamma=1", "c_plus=1", "c_minus=1"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["exponents"]["theta"], 0.25);
    let o = lab(&["theory", "bessel_walk", "mu=0.4"], None);
    let theta = json(&o)["exponents"]["theta"].as_f64().unwrap();
    assert!((theta - 0.35).abs() < 1e-12);
    assert!(!lab(&["theory", "no_such_family"], None).status.success());
}

#[test]
fn inadmissible_start_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: Value = serde_json::from_str(SMALL).unwrap();
    cfg["passage"]["start"] = serde_json::json!({ "z": 1.0, "x": 0.0 });
    let path = dir.path().join("bad.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let o = lab(&["validate", path.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("start"));
}

#[test]
fn env_sets_output_root_and_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    std::fs::write(&cfg, SMALL).unwrap();
    let env_root = dir.path().join("from_env");
    let o = lab(&["run", cfg.to_str().unwrap(), "--workers", "2"], Some(&env_root));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(env_root.join("small/manifest.json").exists());
    assert!(env_root.join("small/survival.csv").exists());
    assert_eq!(json(&o)["status"], "ok");

    let flag_root = dir.path().join("from_flag");
    let o = lab(&["run", cfg.to_str().unwrap(), "--out", flag_root.to_str().unwrap(), "--seed", "3"], Some(&env_root));
    assert!(o.status.success());
    // same seed, different worker count: identical bundle
    let a = std::fs::read(env_root.join("small/manifest.json")).unwrap();
    let b = std::fs::read(flag_root.join("small/manifest.json")).unwrap();
    assert_eq!(a, b);

    let o = lab(&["run", cfg.to_str().unwrap(), "--out", flag_root.to_str().unwrap(), "--seed", "4"], None);
    assert!(o.status.success());
    let c = std::fs::read(flag_root.join("small/manifest.json")).unwrap();
    assert_ne!(a, c);
}

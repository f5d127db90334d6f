use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn holoseq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holoseq")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("holoseq-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn gamma_at_radius_is_a_config_error() {
    let out = holoseq(&["witness", "--domain", "disc", "--gamma", "1.0", "--n-max", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_domain_is_a_config_error() {
    let out = holoseq(&["run", "witness", "--domain", r#"{"shape": {"disc": 3}}"#]);
    assert_eq!(out.status.code(), Some(2));
    let out = holoseq(&["run", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn classify_z_over_n() {
    let out = holoseq(&["classify", "--seq", r#"{"op": "witness", "kind": "z-over-n"}"#, "--domain", "plane"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["uniform"], "no");
    assert_eq!(v["compact"], "yes");
}

#[test]
fn norm_of_z() {
    let out = holoseq(&["norms", "--phi", "z"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - (-1f64).exp()).abs() < 1e-12);
}

#[test]
fn metric_between_truncations() {
    let ctx = r#"{"domain": {"shape": "plane"}, "j": 4, "density": 2}"#;
    let f = r#"{"op": "witness", "kind": "z-over-n"}"#;
    let g = r#"{"op": "truncate", "of": {"op": "witness", "kind": "z-over-n"}, "n0": 3}"#;
    let out = holoseq(&["metric", "--kind", "dtilde", "--ctx", ctx, "--f", f, "--g", g, "--n-trunc", "6"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let d = v["value"].as_f64().unwrap();
    assert!(d > 0.0 && d <= 0.25);
}

#[test]
fn reports_are_reproducible() {
    let (a, b) = (scratch("a"), scratch("b"));
    for (dir, threads) in [(&a, "1"), (&b, "2")] {
        let out = Command::new(env!("CARGO_BIN_EXE_holoseq"))
            .args(["run", "witness", "--domain", "disc", "--n-max", "3", "--out"])
            .arg(dir)
            .env("HOLOSEQ_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    }
    let strip = |d: &PathBuf| {
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timing");
        v["config"].as_object_mut().unwrap().remove("out");
        v
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(strip(&a)["config"]["seed"], 0);
    for f in ["witness-sp-not-suc.json", "witness-suc-not-su.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
    }
    let _ = std::fs::remove_dir_all(&a);
    let _ = std::fs::remove_dir_all(&b);
}

#[test]
fn suite_on_the_plane_passes() {
    let out = holoseq(&["run", "suite", "--domain", "plane"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(!text.contains("FAIL"));
    for part in ["witness/", "classify/", "algebra/", "span/", "norms/", "residual/"] {
        assert!(text.contains(part), "missing {part}");
    }
}

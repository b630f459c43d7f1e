use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn perenv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perenv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn empty_eps_list_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = perenv(&["--experiment", "figure1", "--eps", "", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("eps list must be nonempty"));
    // Validation happens before anything is written.
    assert!(!out.exists());
}

#[test]
fn unknown_experiment_and_bad_config_exit_with_code_2() {
    let o = perenv(&["--experiment", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"experiment": "cell-orbit", "horizon": -1}"#).unwrap();
    let o = perenv(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_code_3_and_serializes_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    // The datum sits outside the viable set of the figure1 model.
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"experiment": "cell-orbit", "datum": {"center": [1.9], "curvature": 1.0, "mass": 1.0}}"#,
    )
    .unwrap();
    let o = perenv(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["status"], "failed");
    assert_eq!(summary["error"]["kind"], "solver");
    assert_eq!(json(&out.join("manifest.json"))["status"], "failed");
}

#[test]
fn manifest_and_summary_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("orbit");
    let o = perenv(&["--experiment", "cell-orbit", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&out.join("manifest.json"));
    let mut keys: Vec<&str> = m.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["checks", "config", "finished_at", "started_at", "status"]);
    assert_eq!(m["status"], "complete");
    for c in m["checks"].as_array().unwrap() {
        assert!(c["pass"].as_bool().unwrap());
        assert!(c["name"].is_string() && c["value"].is_number() && c["tolerance"].is_number());
    }
    let s = json(&out.join("summary.json"));
    assert_eq!(s["passed"], true);
    assert!(s["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(s["versions"]["perenv-lab"].is_string());
    let csv = fs::read_to_string(out.join("orbit.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("s,I"));
    assert_eq!(csv.lines().count(), 2049);
}

#[test]
fn flags_override_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"experiment": "fluctuation", "seed": 1, "eps": [0.5]}"#).unwrap();
    let out = dir.path().join("fl");
    let o = perenv(&[
        "--config",
        cfg.to_str().unwrap(),
        "--eps",
        "0.04,0.02",
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["eps"], serde_json::json!([0.04, 0.02]));
    assert_eq!(m["config"]["seed"], 9);
    let f = json(&out.join("fluctuation.json"));
    for key in ["x_star", "rho_star", "rho_av", "gap", "identity_residuals"] {
        assert!(f.get(key).is_some(), "{key}");
    }
    // A conflicting experiment name is a configuration error.
    let o = perenv(&["--config", cfg.to_str().unwrap(), "--experiment", "esd"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let o = perenv(&[
            "--experiment",
            "effective-surface",
            "--seed",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(fs::read(out.join("surface.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn short_direct_run_writes_history_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"experiment": "direct-sim", "eps": [0.02], "horizon": 0.25, "compare_from": 0.0,
            "grid": {"half_width": 3.0, "nodes": 256}}"#,
    )
    .unwrap();
    let out = dir.path().join("d");
    let o = perenv(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let h = fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(
        h.lines().next(),
        Some("t,I_eps,xbar_0,rho,max_u,d2u_min,d2u_max")
    );
    // Records every eps/16 from 0 to 0.25.
    assert_eq!(h.lines().count(), 1 + 201);
    let s = fs::read_to_string(out.join("snapshots.csv")).unwrap();
    assert_eq!(s.lines().count(), 1 + 3 * 256);
}

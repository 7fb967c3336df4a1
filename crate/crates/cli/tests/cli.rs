use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};
use tempfile::TempDir;

fn run(dir: &Path, name: &str, mode: &str, cfg: &Value) -> (i32, PathBuf) {
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    let out = dir.join(name);
    let status = Command::new(env!("CARGO_BIN_EXE_warpflow"))
        .args([mode, "--quiet", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    (status.code().unwrap(), out)
}

fn cylinder_rf(t_end: f64) -> Value {
    json!({
        "mode": "flow",
        "flow": {
            "profile": "cylinder:2,1",
            "coeffs": "ricci",
            "points": 21,
            "dt": 1e-3,
            "t_end": t_end,
            "stride": 50
        }
    })
}

fn verify_cfg(perturb: Option<Value>) -> Value {
    let mut v = json!({
        "mode": "verify",
        "flow": {
            "profile": "cylinder:2,1",
            "coeffs": "ricci",
            "points": 21,
            "dt": 1e-4,
            "t_end": 0.01,
            "stride": 10
        },
        "verify": { "equations": ["base-metric-rf", "warp-rf"] },
        "tolerances": { "default": 1e-6 }
    });
    if let Some(p) = perturb {
        v["verify"]["perturb"] = p;
    }
    v
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = cylinder_rf(0.1);
    cfg["flow"]["colour"] = json!("red");
    assert_eq!(run(tmp.path(), "unknown", "flow", &cfg).0, 2);
    let split = json!({"mode": "curvature", "curvature": {"spec": "sphere-split:1"}});
    assert_eq!(run(tmp.path(), "split", "curvature", &split).0, 2);
    assert_eq!(
        run(tmp.path(), "mismatch", "verify", &cylinder_rf(0.1)).0,
        2
    );
    let mut f = verify_cfg(None);
    f["verify"] = json!({"equations": ["f-evolution"], "einstein_fiber": false});
    assert_eq!(run(tmp.path(), "no-einstein", "verify", &f).0, 2);
}

#[test]
fn flow_runs_and_singularities() {
    let tmp = TempDir::new().unwrap();
    let (code, out) = run(tmp.path(), "short", "flow", &cylinder_rf(0.4));
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.join("flow.csv")).unwrap();
    assert!(csv.starts_with("schema_version,t,"));
    assert_eq!(csv.lines().count(), 1 + 9);

    let (code, out) = run(tmp.path(), "long", "flow", &cylinder_rf(0.6));
    assert_eq!(code, 4);
    let t = summary(&out)["singularity"]["t"].as_f64().unwrap();
    assert!((t - 0.5).abs() <= 2e-3, "{t}");
    let last: Value =
        serde_json::from_str(&fs::read_to_string(out.join("final_state.json")).unwrap()).unwrap();
    assert!(last["lam"]
        .as_array()
        .unwrap()
        .iter()
        .all(|v| v.is_number()));
}

#[test]
fn unstable_step_exits_5() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = cylinder_rf(0.1);
    cfg["flow"]["dt"] = json!(1e-2);
    assert_eq!(run(tmp.path(), "cfl", "flow", &cfg).0, 5);
}

#[test]
fn numerical_failures_exit_3() {
    let tmp = TempDir::new().unwrap();
    let degenerate = json!({
        "mode": "curvature",
        "curvature": {
            "spec": { "base": "diag:x1-x2,1", "fiber": "sphere:2", "warp": "1" },
            "samples": 4
        }
    });
    assert_eq!(run(tmp.path(), "degenerate", "curvature", &degenerate).0, 3);
    let blocker = tmp.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let cfg = json!({"mode": "curvature", "curvature": {"spec": "cylinder:2,1"}});
    let path = tmp.path().join("io.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_warpflow"))
        .args(["curvature", "--quiet", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(blocker.join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn verify_flags_perturbations() {
    let tmp = TempDir::new().unwrap();
    let (code, out) = run(tmp.path(), "clean", "verify", &verify_cfg(None));
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.join("flow.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("res.warp-rf.linf"));
    let kick = json!({"snapshot": 5, "lambda_scale": 1.01});
    let (code, out) = run(tmp.path(), "kicked", "verify", &verify_cfg(Some(kick)));
    assert_eq!(code, 1);
    assert_eq!(summary(&out)["status"], "fail");
    let far = json!({"snapshot": 50, "lambda_scale": 1.01});
    assert_eq!(
        run(tmp.path(), "far", "verify", &verify_cfg(Some(far))).0,
        2
    );
}

#[test]
fn outputs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = verify_cfg(None);
    let (_, a) = run(tmp.path(), "a", "verify", &cfg);
    let (_, b) = run(tmp.path(), "b", "verify", &cfg);
    for f in ["flow.csv", "summary.json", "final_state.json"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn shipped_scenarios_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            warpflow_cli::ScenarioConfig::load(&path)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 5);
}

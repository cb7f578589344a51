use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run(config: &str, out: &Path, extra: &[&str]) -> (i32, String, String) {
    let cfg = out.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fracperim"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stdout).into(), String::from_utf8_lossy(&o.stderr).into())
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn experiment(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments").join(name)).unwrap()
}

#[test]
fn zeta_of_half_space() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&experiment("zeta_half_space.json"), dir.path(), &[]);
    assert_eq!(code, 0, "{err}");
    let r = report(dir.path());
    let z = r["result"]["extrapolated"].as_f64().unwrap();
    assert!((z - 0.5).abs() <= 0.01);
    assert!(r["result"]["error_bound"].is_number());
    assert_eq!(r["config"]["kernel"]["n"], 2);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with("s,value,error_bound\n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn missing_s_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"command":"curvature","shape":{"type":"ball","center":[0,0],"radius":1}}"#;
    let (code, _, err) = run(cfg, dir.path(), &[]);
    assert_eq!(code, 2);
    assert!(err.contains("kernel.s"), "{err}");
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn malformed_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run("{\"command\": \"zeta\",", dir.path(), &[]);
    assert_eq!(code, 2, "{err}");
    let (code, _, err) = run(r#"{"command":"zeta","shape":{"type":"ball","center":[0,0],"radius":-1}}"#, dir.path(), &[]);
    assert_eq!(code, 2);
    assert!(err.contains("`shape`"), "{err}");
}

#[test]
fn unbounded_set_is_rejected_for_the_global_perimeter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"command":"perimeter-global","shape":{"type":"half_space","normal":[0,1],"offset":0},"kernel":{"s":0.5}}"#;
    let (code, _, err) = run(cfg, dir.path(), &[]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("unbounded"), "{err}");
}

#[test]
fn unreachable_volume_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"command":"plateau-volume",
        "omega":{"type":"box","lo":[0,0],"hi":[1,1]},
        "exterior":{"type":"empty","dim":2},
        "grid":{"lo":[0,0],"hi":[1,1],"cells":[6,6]},
        "kernel":{"s":0.5},
        "plateau":{"target_volume":0.5}}"#;
    let (code, _, err) = run(cfg, dir.path(), &[]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("unreachable"), "{err}");
}

#[test]
fn plateau_half_space_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&experiment("plateau_half_space.json"), dir.path(), &["--threads", "0"]);
    assert_eq!(code, 0, "{err}");
    let r = report(dir.path());
    let f = r["result"]["flatness"].as_f64().unwrap();
    assert!(f <= 1.0, "flatness {f}");
    assert!(dir.path().join("occupancy.bin").exists());
}

#[test]
fn stickiness_experiment_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&experiment("stickiness.json"), dir.path(), &["--debug-checks"]);
    assert_eq!(code, 0, "{err}");
    let r = report(dir.path());
    assert!(r["result"]["max_trace_gap"].as_f64().unwrap() > 0.0);
    assert!(!r["result"]["boundary_trace_gap"].as_array().unwrap().is_empty());
}

#[test]
fn reports_are_reproducible_apart_from_the_timestamp() {
    let cfg = r#"{"command":"curvature","shape":{"type":"ball","center":[0,0],"radius":1},
        "kernel":{"s":0.5},"curvature":{"mesh_resolution":12}}"#;
    let strip = |p: &Path| {
        let mut v = report(p);
        v.as_object_mut().unwrap().remove("timestamp");
        serde_json::to_string(&v).unwrap()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run(cfg, a.path(), &["--threads", "1"]).0, 0);
    assert_eq!(run(cfg, b.path(), &["--threads", "3"]).0, 0);
    assert_eq!(strip(a.path()), strip(b.path()));
    let csv = std::fs::read_to_string(a.path().join("profile.csv")).unwrap();
    assert!(csv.starts_with("point_index,x,y,H_s\n"));
    assert_eq!(csv.lines().count(), 13);
}

use std::f64::consts::LN_2;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torsion-lab")).args(args).output().expect("binary runs")
}

fn report(args: &[&str]) -> Value {
    let out = lab(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn constant_c_routes_agree() {
    let r = report(&["constant-c"]);
    assert_eq!(r["result"]["constant_c"]["method_agreement"], Value::Bool(true));
    let c = r["result"]["constant_c"]["value"].as_f64().unwrap();
    assert!((c - r["result"]["closed_form"].as_f64().unwrap()).abs() < 1e-9);
}

#[test]
fn product_collar_prediction() {
    let r = report(&["predict-anomaly", "--geometry", "product_collar", "--rank", "3"]);
    let res = &r["result"];
    assert_eq!(res["term_transgression"].as_f64(), Some(0.0));
    assert_eq!(res["term_phi"].as_f64(), Some(0.0));
    // Default boundary is the round 2-sphere.
    assert_eq!(res["prediction"].as_f64(), Some(3.0 * 2.0 * LN_2));
}

#[test]
fn prediction_is_the_sum_of_its_terms() {
    let r = report(&["predict-anomaly", "--geometry", "curved_cap", "--rank", "2"]);
    let f = |k: &str| r["result"][k].as_f64().unwrap();
    assert_eq!(f("prediction"), f("term_chi") + f("term_transgression") + f("constant_c") * f("term_phi") * 2.0);
    assert!((f("term_transgression") + 2.0 * 1f64.cos()).abs() < 1e-8);
}

#[test]
fn interval_anomaly_does_not_depend_on_length() {
    let a = report(&["interval-anomaly", "--length", "1"]);
    let b = report(&["interval-anomaly", "--length", "2"]);
    for key in ["anomaly", "prediction", "residual"] {
        let (x, y) = (a["result"][key].as_f64().unwrap(), b["result"][key].as_f64().unwrap());
        assert!((x - y).abs() < 1e-8, "{key}: {x} vs {y}");
    }
    assert!((a["result"]["lnT"].as_f64().unwrap() + 2f64.ln()).abs() < 1e-12);
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let once = || {
        let out = lab(&["predict-anomaly", "--geometry", "flat_disc", "--seed", "3", "-o", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(&path).unwrap()
    };
    let a = once();
    assert!(!a.is_empty());
    assert_eq!(a, once());
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, r#"{"length": 0.5, "rank": 2}"#).unwrap();
    let r = report(&["interval-anomaly", "--length", "3", "--config", path.to_str().unwrap()]);
    assert_eq!(r["config"]["length"].as_f64(), Some(0.5));
    assert!((r["result"]["lnT"].as_f64().unwrap() - 2.0 * -(1f64.ln())).abs() < 1e-12);
}

#[test]
fn input_errors_exit_with_one() {
    assert_eq!(lab(&["predict-anomaly", "--geometry", "klein_bottle"]).status.code(), Some(1));
    assert_eq!(lab(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(lab(&["interval-anomaly", "--length", "-1"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad_tensor = dir.path().join("bad.txt");
    std::fs::write(&bad_tensor, "dim 2\nR 0 1 0 1 2.0\nR 1 0 0 1 5.0\n").unwrap();
    let geo = dir.path().join("geo.json");
    let spec = serde_json::json!({"kind": "tensor_point", "file": bad_tensor, "boundary_volume": 1.0, "boundary_euler_characteristic": 0});
    std::fs::write(&geo, spec.to_string()).unwrap();
    let out = lab(&["predict-anomaly", "--geometry", geo.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let config = dir.path().join("c.json");
    std::fs::write(&config, r#"{"no_such_key": 1}"#).unwrap();
    assert_eq!(lab(&["constant-c", "--config", config.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn tensor_point_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let tensor = dir.path().join("point.txt");
    std::fs::write(&tensor, "dim 3\nR 1 2 1 2 1.0\nR 0 1 0 1 0.7\nR 0 2 0 2 -0.4\nh 1 1 0.5\nh 2 2 -0.3\nh 1 2 0.2\n").unwrap();
    let geo = dir.path().join("geo.json");
    let spec = serde_json::json!({"kind": "tensor_point", "file": tensor, "boundary_volume": 2.0, "boundary_euler_characteristic": 2});
    std::fs::write(&geo, spec.to_string()).unwrap();
    let r = report(&["predict-anomaly", "--geometry", geo.to_str().unwrap()]);
    // Odd dimension: the transgression density vanishes.
    assert_eq!(r["result"]["term_transgression"].as_f64(), Some(0.0));
    assert!(r["result"]["term_phi"].as_f64().unwrap() != 0.0);
}

#[test]
fn tolerance_failures_exit_with_two_and_name_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    std::fs::write(&config, r#"{"berezin": {"scale": 1.01}}"#).unwrap();
    let out = lab(&["transgression", "--geometry", "flat_disc", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Stokes gap"));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["passed"], Value::Bool(false));
    let out = lab(&["berezin-check", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn berezin_check_in_both_scalar_modes() {
    for mode in ["exact", "float"] {
        let r = report(&["berezin-check", "--scalar", mode]);
        assert_eq!(r["passed"], Value::Bool(true));
    }
}

#[test]
fn worker_count_from_environment() {
    let ok = Command::new(env!("CARGO_BIN_EXE_torsion-lab")).args(["spectrum"]).env("TORSION_LAB_WORKERS", "2").output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let text = String::from_utf8(ok.stdout).unwrap();
    assert!(text.starts_with("lambda,multiplicity,degree\n"));
    let bad = Command::new(env!("CARGO_BIN_EXE_torsion-lab")).args(["spectrum"]).env("TORSION_LAB_WORKERS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_starpath"))
        .args(args)
        .arg("--output-dir")
        .arg(dir)
        .output()
        .expect("binary runs");
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn without_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn amplitude_star_oracle_agree_for_quadratic_hamiltonian() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["amplitude", "--routes", "star,oracle"]), 0);
    let report = read_json(&dir.path().join("amplitude.json"));
    assert!(report["report"]["max_rel_error"].as_f64().unwrap() <= 1e-8);
    assert_eq!(report["config"]["routes"], serde_json::json!(["star", "oracle"]));
    assert_eq!(report["config"]["D"], 40);
    assert!(report["timing"]["elapsed_ms"].is_number());
    let summary = fs::read_to_string(dir.path().join("amplitude.txt")).unwrap();
    assert!(summary.contains("PASS"));
}

#[test]
fn amplitude_with_all_routes_passes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["amplitude", "--alpha-i", "0.3,0.4", "--alpha-f", "-0.5,0"]), 0);
    let report = read_json(&dir.path().join("amplitude.json"));
    assert_eq!(report["report"]["errors"].as_array().unwrap().len(), 6);
}

#[test]
fn amplitude_with_no_routes_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"routes": []}"#);
    assert_eq!(run(dir.path(), &["amplitude", "--config", &cfg]), 2);
}

#[test]
fn amplitude_with_coarse_truncation_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["amplitude", "--alpha-i", "6,0", "-D", "8"]), 3);
    assert!(!dir.path().join("amplitude.json").exists());
}

#[test]
fn amplitude_tolerance_violation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(
        dir.path(),
        &["amplitude", "--routes", "star,sliced", "--n-list", "10,20,40", "--agreement-tol", "1e-12"],
    );
    assert_eq!(code, 1);
    let report = read_json(&dir.path().join("amplitude.json"));
    assert_eq!(report["passed"], false);
}

#[test]
fn malformed_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{not json");
    assert_eq!(run(dir.path(), &["amplitude", "--config", &cfg]), 2);
    let cfg = write_config(dir.path(), r#"{"unknown_knob": 1}"#);
    assert_eq!(run(dir.path(), &["amplitude", "--config", &cfg]), 2);
    let cfg = write_config(dir.path(), r#"{"hamiltonian": [[1.5, 1, 1, 0]]}"#);
    assert_eq!(run(dir.path(), &["amplitude", "--config", &cfg]), 2);
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"T": 0.5, "routes": ["star", "oracle"]}"#);
    assert_eq!(run(dir.path(), &["amplitude", "-T", "2", "--config", &cfg]), 0);
    let report = read_json(&dir.path().join("amplitude.json"));
    assert_eq!(report["config"]["T"], 0.5);
}

#[test]
fn embedded_config_reproduces_the_report() {
    let first = tempfile::tempdir().unwrap();
    assert_eq!(
        run(first.path(), &["amplitude", "--routes", "star,oracle,optical", "-T", "0.7", "--alpha-i", "0.1,-0.3"]),
        0
    );
    let report = read_json(&first.path().join("amplitude.json"));
    let second = tempfile::tempdir().unwrap();
    let mut cfg = report["config"].clone();
    cfg["output_dir"] = Value::String(second.path().to_str().unwrap().into());
    let cfg_path = write_config(second.path(), &serde_json::to_string(&cfg).unwrap());
    assert_eq!(run(second.path(), &["amplitude", "--config", &cfg_path]), 0);
    let again = read_json(&second.path().join("amplitude.json"));
    assert_eq!(again["report"], report["report"]);
    let mut a = report["config"].clone();
    a["output_dir"] = Value::Null;
    let mut b = again["config"].clone();
    b["output_dir"] = Value::Null;
    assert_eq!(a, b);
}

#[test]
fn outputs_leave_no_temporary_files() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["amplitude", "--routes", "star,oracle"]), 0);
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["amplitude.json", "amplitude.txt"]);
}

#[test]
fn convergence_slope_is_first_order() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["convergence"]), 0);
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("N,epsilon,abs_error,rel_error"));
    assert_eq!(lines.count(), 4);
    let sidecar = read_json(&dir.path().join("convergence.json"));
    let slope = sidecar["slope"].as_f64().unwrap();
    assert!((0.9..=1.1).contains(&slope), "slope {slope}");
    assert_eq!(sidecar["exact"], false);
}

#[test]
fn convergence_for_zero_hamiltonian_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["convergence", "--hamiltonian", "[]"]), 0);
    let sidecar = read_json(&dir.path().join("convergence.json"));
    assert_eq!(sidecar["exact"], true);
    assert!(sidecar["slope"].is_null());
}

#[test]
fn convergence_needs_three_slice_counts() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["convergence", "--n-list", "10,20"]), 2);
}

fn grid(dir: &Path) -> Vec<(f64, f64, f64)> {
    let csv = fs::read_to_string(dir.join("qdist.csv")).unwrap();
    csv.lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (v[0], v[1], v[2])
        })
        .collect()
}

#[test]
fn qdist_vacuum_husimi_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["qdist", "--s=-1", "--window=-3,3", "--grid-points", "31"]), 0);
    let samples = grid(dir.path());
    assert_eq!(samples.len(), 31 * 31);
    for (x, y, v) in samples {
        let want = (-(x * x + y * y)).exp() / PI;
        assert!((v - want).abs() <= 1e-8, "Q({x},{y}) = {v}, want {want}");
    }
    let sidecar = read_json(&dir.path().join("qdist.json"));
    assert!(sidecar["normalization_residual"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn qdist_vacuum_wigner_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["qdist", "--s", "0", "--grid-points", "31"]), 0);
    for (x, y, v) in grid(dir.path()) {
        let want = 2.0 * (-2.0 * (x * x + y * y)).exp() / PI;
        assert!((v - want).abs() <= 1e-8, "W({x},{y}) = {v}, want {want}");
    }
}

#[test]
fn qdist_refuses_glauber_order() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["qdist", "--s", "1"]), 3);
    assert_eq!(run(dir.path(), &["qdist", "--s", "2"]), 2);
}

#[test]
fn star_product_of_ladder_symbols() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["star-product", "--left", "[[0,1,1,0]]", "--right", "[[1,0,1,0]]"]), 0);
    let out = read_json(&dir.path().join("star_product.json"));
    let mut product: Vec<Vec<f64>> = serde_json::from_value(out["product"].clone()).unwrap();
    product.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(product, vec![vec![0.0, 0.0, 1.0, 0.0], vec![1.0, 1.0, 1.0, 0.0]]);
    assert_eq!(out["commutator"], serde_json::json!([[0.0, 0.0, 1.0, 0.0]]));
}

#[test]
fn selftest_is_byte_identical_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("selftest.json");
    assert_eq!(run(dir.path(), &["selftest"]), 0);
    let first = fs::read_to_string(&path).unwrap();
    assert_eq!(run(dir.path(), &["selftest"]), 0);
    let second = fs::read_to_string(&path).unwrap();
    // Keys are sorted, so the timing block closes the document.
    let cut = |s: &str| s[..s.find("\"timing\"").expect("timing field")].to_string();
    assert_eq!(cut(&first), cut(&second));
    assert_eq!(without_timing(read_json(&path))["report"]["passed"], true);
}

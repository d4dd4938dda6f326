use std::fs;

use stokes_spectra::cli::{parse_config, run_command, Command, EXIT_OK, EXIT_VALIDATION};

const CONFIG: &str = r#"{
  "potential": [[[0, 0], [0, -1]], [[0, 1]]],
  "a": [-1, 0],
  "b": [1, 0],
  "domain": {"lower_left": [-1.2, -3.2], "upper_right": [1.2, 0.6], "exclude_singular": 0.1},
  "k": [20],
  "lambda": [0, -0.5]
}"#;

fn config_in(dir: &std::path::Path) -> stokes_spectra::cli::RunConfig {
    let mut cfg = parse_config(CONFIG).unwrap();
    cfg.out = dir.to_path_buf();
    cfg
}

fn manifest(dir: &std::path::Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn graph_writes_artifacts_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_command(Command::Graph, &config_in(dir.path())), EXIT_OK);
    let csv = fs::read_to_string(dir.path().join("graph.csv")).unwrap();
    assert!(csv.starts_with("complex_id,line_id,re_z,im_z"));
    assert!(csv.lines().count() > 10);
    assert!(fs::read_to_string(dir.path().join("graph.svg")).unwrap().contains("<polyline"));
    let m = manifest(dir.path());
    assert_eq!(m["status"], "ok");
    assert_eq!(m["artifacts"].as_array().unwrap().len(), 2);
}

#[test]
fn quantize_writes_estimates() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_command(Command::Quantize, &config_in(dir.path())), EXIT_OK);
    let mut rd = csv::Reader::from_path(dir.path().join("quantize.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert!(!rows.is_empty());
    for r in rows {
        let residual: f64 = r[6].parse().unwrap();
        assert!(residual < 1e-6);
    }
}

#[test]
fn missing_lambda_is_a_validation_error_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_in(dir.path());
    cfg.lambda = None;
    assert_eq!(run_command(Command::Graph, &cfg), EXIT_VALIDATION);
    let m = manifest(dir.path());
    assert_eq!(m["status"], "error");
    assert_eq!(m["exit_code"], EXIT_VALIDATION);
    assert!(m["error"].as_str().unwrap().contains("lambda"));
}

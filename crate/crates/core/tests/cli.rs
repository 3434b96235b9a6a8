use std::fs;
use std::path::Path;
use std::process::Command;

use xfid::harness::{run_single, SingleRequest};
use xfid::metrics::{read_records, RESULTS_HEADER};
use xfid::{run_sweep, ExperimentConfig, ExplainerId, GridSelection, HarnessError, Status};

const LINEAR_MODEL: &str = r#"{"d":3,"dummy_features":[2],"effects":[
    {"features":[0],"expr":["leaf",0]},
    {"features":[1],"expr":["add",["leaf",1],["leaf",1]]}]}"#;

fn xfid(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_xfid")).args(args).output().expect("binary runs")
}

fn tiny_config() -> ExperimentConfig {
    ExperimentConfig {
        grid: GridSelection {
            d: vec![3],
            n_dummy_frac: vec![0.0],
            pct_nonlinear: vec![0.5],
            pct_interact: vec![0.5],
            order_interact: vec![1, 2],
        },
        models_per_cell: 2,
        samples_per_model: 10,
        record_timing: false,
        ..ExperimentConfig::default()
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn corrupt_config_exits_with_config_code_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"models_per_cell": 2, "samples_per_modle": 5}"#).unwrap();
    let out = xfid(&["sweep", "--config", path_str(&cfg), "--out", path_str(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("samples_per_modle"));

    fs::write(&cfg, "{not json").unwrap();
    let out = xfid(&["gen", "--config", path_str(&cfg), "--out", path_str(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupt_model_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    fs::write(&model, r#"{"d":2,"effects":[{"features":[0],"expr":["sqrrt",["leaf",0]]}]}"#).unwrap();
    let out = xfid(&["explain", "--model", path_str(&model), "--explainer", "shap"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn defaults_print_a_loadable_config() {
    let out = xfid(&["config", "--defaults"]);
    assert!(out.status.success());
    let cfg = ExperimentConfig::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
}

#[test]
fn explain_then_eval_agree() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    fs::write(&model, LINEAR_MODEL).unwrap();
    let out = xfid(&["explain", "--model", path_str(&model), "--explainer", "shap", "--exact-shap", "--samples", "30"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let explained = read_records(out.stdout.as_slice()).unwrap();
    for f in ["data.csv", "shap.expl.json", "shap.match.json", "shap.metrics.csv"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let expl = dir.path().join("shap.expl.json");
    let out = xfid(&["eval", "--model", path_str(&model), "--expl", path_str(&expl)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let evaluated = read_records(out.stdout.as_slice()).unwrap();
    assert_eq!(evaluated[0].mean_cosine, explained[0].mean_cosine);
    assert_eq!(evaluated[0].maiou, Some(1.0));
}

#[test]
fn linear_fixture_is_recovered_by_exact_shap() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    fs::write(&model, LINEAR_MODEL).unwrap();
    let mut req = SingleRequest::new(&model, ExplainerId::Shap, 3);
    req.settings.shap.force_exact = true;
    let out = run_single(&req).unwrap();
    assert_eq!(out.record.status, Status::Ok);
    assert!(out.record.mean_cosine.unwrap() <= 1e-3, "{:?}", out.record.mean_cosine);
    // dummy feature 2 is attributed nothing and filtered out
    assert_eq!(out.scores.unwrap().kept, vec![0, 1]);
}

#[test]
fn timeout_becomes_a_status_row() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    fs::write(&model, LINEAR_MODEL).unwrap();
    let out = xfid(&["explain", "--model", path_str(&model), "--explainer", "lime", "--timeout", "0.000001"]);
    assert_eq!(out.status.code(), Some(Status::Timeout.exit_code()));
    let rows = read_records(out.stdout.as_slice()).unwrap();
    assert_eq!(rows[0].status, Status::Timeout);
    assert_eq!(rows[0].mean_cosine, None);
}

#[test]
fn empty_explainer_list_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { explainers: vec![], ..tiny_config() };
    let out = run_sweep(&cfg, dir.path()).unwrap();
    assert!(out.records.is_empty());
    let text = fs::read_to_string(out.results_path).unwrap();
    assert_eq!(text.trim_end(), RESULTS_HEADER.join(","));
}

#[test]
fn rerun_reuses_valid_rows_and_redoes_tampered_ones() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config();
    let first = run_sweep(&cfg, dir.path()).unwrap();
    let ok = first.records.iter().filter(|r| r.status == Status::Ok).count();
    assert!(ok > 0);
    let bytes = fs::read(&first.results_path).unwrap();

    let second = run_sweep(&cfg, dir.path()).unwrap();
    assert_eq!(second.reused, ok);
    assert_eq!(fs::read(&second.results_path).unwrap(), bytes);

    let target = first.records.iter().find(|r| r.status == Status::Ok).unwrap();
    let expl = dir.path().join(&target.model_id).join(format!("{}.expl.json", target.explainer));
    let mut text = fs::read_to_string(&expl).unwrap();
    text.push(' ');
    fs::write(&expl, text).unwrap();
    let third = run_sweep(&cfg, dir.path()).unwrap();
    assert_eq!(third.reused, ok - 1);
    assert_eq!(fs::read(&third.results_path).unwrap(), bytes);

    let changed = ExperimentConfig { seed: 1, ..cfg };
    assert_eq!(run_sweep(&changed, dir.path()).unwrap().reused, 0);
}

#[test]
fn report_summarizes_a_sweep() {
    let dir = tempfile::tempdir().unwrap();
    run_sweep(&tiny_config(), dir.path()).unwrap();
    let summary = dir.path().join("summary.csv");
    let out = xfid(&["report", "--in", path_str(dir.path()), "--out", path_str(&summary)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(summary).unwrap();
    // two cells and the overall cell, three explainers each
    assert_eq!(text.lines().count(), 1 + 3 * 3);
    assert!(text.lines().any(|l| l.starts_with("all,shap,")));
}

#[test]
fn missing_input_is_an_io_error() {
    let err = xfid::harness::report(Path::new("/nonexistent/results.csv"), Path::new("/tmp/never.csv")).unwrap_err();
    assert!(matches!(err, HarnessError::Io { .. }));
    assert_eq!(err.exit_code(), 1);
}

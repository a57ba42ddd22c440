use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use reconplan_core::schema::TYPE_COLUMN;
use reconplan_core::{load_csv, reference_schema, TrainedModel, Value};
use serde_json::{json, Value as Json};

fn reconplan(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reconplan"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn error_report(out: &Output) -> Json {
    assert_eq!(out.status.code(), Some(1));
    serde_json::from_slice(&out.stderr).expect("stderr carries a JSON report")
}

/// Generates data, trains a small model and writes a scenario built from
/// the first boiler-house row.
fn prepared() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(reconplan(d, &["generate-data", "--rows", "60", "--seed", "3", "--out", "data.csv"]));
    ok(reconplan(
        d,
        &["train", "--data", "data.csv", "--type", "boiler_house", "--seed", "3",
          "--hidden-units", "6", "--cycles", "10", "--out", "model.json"],
    ));
    let ds = load_csv(std::fs::File::open(d.join("data.csv")).unwrap(), &reference_schema()).unwrap();
    let flag = ds.schema().index_of(TYPE_COLUMN).unwrap();
    let row = ds.rows().iter().find(|r| r[flag] == Some(Value::Bool(false))).unwrap();
    let values: BTreeMap<String, Value> = ds
        .schema()
        .columns()
        .iter()
        .zip(row)
        .filter(|(c, _)| !["Num", "isCGP", "mCO"].contains(&c.name.as_str()))
        .filter_map(|(c, v)| v.clone().map(|v| (c.name.clone(), v)))
        .collect();
    let scenario = json!({"object_type": "boiler_house", "fixed_values": values,
                          "limits": {"effBoil": {"min": 85.0}}});
    let candidates = json!([
        {"id": "keep", "overrides": {}},
        {"id": "upgrade", "overrides": {"effBoil": 92.5, "hasVfd": 1}},
        {"id": "cheap", "overrides": {"effBoil": 84.0}}
    ]);
    std::fs::write(d.join("values.json"), values_json(&values)).unwrap();
    std::fs::write(d.join("scenario.json"), scenario.to_string()).unwrap();
    std::fs::write(d.join("candidates.json"), candidates.to_string()).unwrap();
    dir
}

fn values_json(values: &BTreeMap<String, Value>) -> String {
    serde_json::to_string(values).unwrap()
}

#[test]
fn generate_to_stdout_matches_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let stdout = ok(reconplan(d, &["generate-data", "--rows", "25", "--seed", "9"]));
    ok(reconplan(d, &["generate-data", "--rows", "25", "--seed", "9", "--out", "x.csv"]));
    assert_eq!(stdout, std::fs::read_to_string(d.join("x.csv")).unwrap());
    assert_eq!(stdout.lines().count(), 26);
    assert!(stdout.starts_with("Num,isCGP,fuel,"));
}

#[test]
fn train_prints_metrics_and_writes_model() {
    let dir = prepared();
    let d = dir.path();
    let model = TrainedModel::from_json(&std::fs::read_to_string(d.join("model.json")).unwrap()).unwrap();
    assert_eq!(model.hyperparameters.hidden_units, 6);
    assert_eq!(model.hyperparameters.seed, 3);
    let out: Json = serde_json::from_str(&ok(reconplan(
        d,
        &["train", "--data", "data.csv", "--type", "bh", "--seed", "3",
          "--hidden-units", "6", "--cycles", "10", "--out", "again.json"],
    )))
    .unwrap();
    assert_eq!(out["metrics"], serde_json::to_value(model.metrics.unwrap()).unwrap());
    assert_eq!(out["test_rows"].as_u64().unwrap(), model.metrics.unwrap().n as u64);
    assert_eq!(
        std::fs::read(d.join("model.json")).unwrap(),
        std::fs::read(d.join("again.json")).unwrap()
    );
}

#[test]
fn whatif_sweep_predict_and_evaluate() {
    let dir = prepared();
    let d = dir.path();
    let report: Json = serde_json::from_str(&ok(reconplan(
        d,
        &["whatif", "--model", "model.json", "--scenario", "scenario.json",
          "--candidates", "candidates.json", "--out", "report.json"],
    )))
    .unwrap();
    assert_eq!(report["status"], "selected");
    let cheap = report["ranked"].as_array().unwrap().iter().find(|r| r["candidate_id"] == "cheap").unwrap();
    assert_eq!(cheap["feasible"], false);
    let saved: Json = serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(saved, report);

    let csv = ok(reconplan(
        d,
        &["sweep", "--model", "model.json", "--scenario", "scenario.json",
          "--parameter", "effBoil", "--lo", "80", "--hi", "94", "--steps", "7"],
    ));
    assert!(csv.starts_with("effBoil,predicted_mco\n"));
    assert_eq!(csv.lines().count(), 9);
    let json_curve: Json = serde_json::from_str(&ok(reconplan(
        d,
        &["sweep", "--model", "model.json", "--scenario", "scenario.json",
          "--parameter", "effBoil", "--lo", "80", "--hi", "94", "--steps", "7", "--format", "json"],
    )))
    .unwrap();
    assert_eq!(json_curve["points"].as_array().unwrap().len(), 8);

    let pred: Json = serde_json::from_str(&ok(reconplan(
        d,
        &["predict", "--model", "model.json", "--values", "values.json"],
    )))
    .unwrap();
    let keep = report["ranked"].as_array().unwrap().iter().find(|r| r["candidate_id"] == "keep").unwrap();
    assert_eq!(pred["predicted_mco"], keep["predicted_mco"]);

    let metrics: Json = serde_json::from_str(&ok(reconplan(
        d,
        &["evaluate", "--model", "model.json", "--data", "data.csv"],
    )))
    .unwrap();
    assert!(metrics["n"].as_u64().unwrap() > 20);
    assert!(metrics["r2"].is_number());
}

#[test]
fn failures_exit_with_json_reports() {
    let dir = prepared();
    let d = dir.path();

    let out = reconplan(d, &["train", "--data", "missing.csv", "--type", "bh", "--out", "m.json"]);
    let err = error_report(&out);
    assert_eq!((err["stage"].as_str(), err["code"].as_str()), (Some("load"), Some("IoError")));
    assert!(err["message"].as_str().unwrap().contains("missing.csv"));

    std::fs::write(d.join("bad.csv"), "Num,isCGP\n1,0\n").unwrap();
    let err = error_report(&reconplan(d, &["train", "--data", "bad.csv", "--type", "bh", "--out", "m.json"]));
    assert_eq!(err["code"], "HeaderMismatch");

    let err = error_report(&reconplan(
        d,
        &["train", "--data", "data.csv", "--type", "bh", "--learning-rate", "0", "--out", "m.json"],
    ));
    assert_eq!((err["stage"].as_str(), err["code"].as_str()), (Some("request"), Some("InvalidHyperparameters")));

    std::fs::write(d.join("none.json"), "[]").unwrap();
    let err = error_report(&reconplan(
        d,
        &["whatif", "--model", "model.json", "--scenario", "scenario.json", "--candidates", "none.json"],
    ));
    assert_eq!((err["stage"].as_str(), err["code"].as_str()), (Some("decide"), Some("NoCandidates")));

    let err = error_report(&reconplan(
        d,
        &["sweep", "--model", "model.json", "--scenario", "scenario.json",
          "--parameter", "fuel", "--lo", "0", "--hi", "1"],
    ));
    assert_eq!(err["code"], "NonNumericParameter");

    let mut text = std::fs::read_to_string(d.join("model.json")).unwrap();
    text = text.replacen("\"version\": 1", "\"version\": 7", 1);
    std::fs::write(d.join("future.json"), text).unwrap();
    let err = error_report(&reconplan(d, &["evaluate", "--model", "future.json", "--data", "data.csv"]));
    assert_eq!(err["code"], "UnsupportedVersion");
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = reconplan(dir.path(), &["train", "--type", "castle"]);
    assert_eq!(out.status.code(), Some(2));
    let out = reconplan(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn schema_lists_reference_columns() {
    let dir = tempfile::tempdir().unwrap();
    let schema: Json = serde_json::from_str(&ok(reconplan(dir.path(), &["schema"]))).unwrap();
    let cols = schema.as_array().unwrap();
    assert_eq!(cols.len(), 56);
    assert_eq!(cols[0]["name"], "Num");
}

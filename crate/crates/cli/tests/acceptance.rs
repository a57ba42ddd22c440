//! Acceptance checks for the whole system, one PASS/FAIL line each.
//!
//! Run with `cargo test -p reconplan-cli --test acceptance`. The process
//! exits non-zero when any check fails.

use std::collections::{BTreeMap, BTreeSet};
use std::net::SocketAddr;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reconplan_core::dataset::train_size;
use reconplan_core::schema::{SERIAL_COLUMN, TARGET_COLUMN, TYPE_COLUMN};
use reconplan_core::{
    decide, generate_synthetic, redistribute, reference_schema, run_pipeline, split, Candidate,
    ColumnKind, Dataset, DecisionStatus, Error, Limit, Metrics, Network, ObjectType,
    PipelineConfig, Row, Scenario, TrainedModel, Value,
};
use reconplan_service::{AppState, BackgroundServer, ServiceConfig};
use serde_json::{json, Value as Json};

type Check = Result<String, String>;
type CheckFn = fn() -> Check;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- metrics

fn r2_plus_rse_is_one() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..80);
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let y: Vec<f64> = d.iter().map(|v| v + rng.random_range(-30.0..30.0)).collect();
        let m = Metrics::from_predictions(&y, &d).map_err(|e| e.to_string())?;
        worst = worst.max((m.r2 + m.rse - 1.0).abs());
    }
    ensure(worst <= 1e-9, || format!("max |r2 + rse - 1| = {worst:e}"))?;
    Ok(format!("1000 random sets, max deviation {worst:e}"))
}

fn metric_hand_oracle() -> Check {
    let m = Metrics::from_predictions(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).map_err(|e| e.to_string())?;
    let expected = [
        ("mae", m.mae, 1.0 / 3.0),
        ("rae", m.rae, 0.3),
        ("rse", m.rse, 3.0 / 14.0),
        ("r2", m.r2, 11.0 / 14.0),
    ];
    for (name, got, want) in expected {
        ensure((got - want).abs() <= 1e-12, || format!("{name} = {got}, expected {want}"))?;
    }
    Ok("mae 1/3, rae 0.3, rse 3/14, r2 11/14".into())
}

// ---------------------------------------------------------------- training

fn reference_pipeline() -> Check {
    let start = Instant::now();
    let raw = generate_synthetic(100, 42, 0.02).map_err(|e| e.to_string())?;
    let out = run_pipeline(&raw, &PipelineConfig::new(ObjectType::BoilerHouse, 42))
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let m = out.metrics;
    let detail = format!(
        "r2 {:.4}, rae {:.4}, {} train / {} test rows, {:.2}s",
        m.r2,
        m.rae,
        out.train.len(),
        out.test.len(),
        elapsed.as_secs_f64()
    );
    ensure(m.r2 >= 0.9 && m.rae <= 0.35 && elapsed < Duration::from_secs(5), || detail.clone())?;
    Ok(detail)
}

fn half_sq_error(p: &[f64], f: usize, h: usize, x: &[f64], d: f64) -> f64 {
    let mut y = p[h * f + 2 * h];
    for j in 0..h {
        let mut z = p[h * f + j];
        for i in 0..f {
            z += p[j * f + i] * x[i];
        }
        y += p[h * f + h + j] / (1.0 + (-z).exp());
    }
    0.5 * (y - d) * (y - d)
}

fn gradient_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let step = 1e-5;
    let mut worst = 0.0f64;
    let mut count = 0;
    for _ in 0..100 {
        let f = rng.random_range(1..=6);
        let h = rng.random_range(1..=8);
        let mut draw = |s: f64| rng.random_range(-s..s);
        let w_in: Vec<Vec<f64>> = (0..h).map(|_| (0..f).map(|_| draw(1.0)).collect()).collect();
        let b_in: Vec<f64> = (0..h).map(|_| draw(1.0)).collect();
        let w_out: Vec<f64> = (0..h).map(|_| draw(1.0)).collect();
        let b_out = draw(1.0);
        let x: Vec<f64> = (0..f).map(|_| draw(1.0).abs()).collect();
        let d = draw(1.0);

        let mut params: Vec<f64> = w_in.iter().flatten().copied().collect();
        params.extend(&b_in);
        params.extend(&w_out);
        params.push(b_out);

        let net = Network::new(w_in, b_in, w_out, b_out).map_err(|e| e.to_string())?;
        let analytic = net.backprop(&x, d).map_err(|e| e.to_string())?.flatten();
        for k in 0..params.len() {
            let (mut plus, mut minus) = (params.clone(), params.clone());
            plus[k] += step;
            minus[k] -= step;
            let numeric = (half_sq_error(&plus, f, h, &x, d) - half_sq_error(&minus, f, h, &x, d))
                / (2.0 * step);
            let scale = analytic[k].abs().max(numeric.abs()).max(1e-7);
            worst = worst.max((analytic[k] - numeric).abs() / scale);
            count += 1;
        }
    }
    ensure(worst <= 1e-4, || format!("max relative error {worst:e}"))?;
    Ok(format!("100 nets, {count} parameters, max relative error {worst:e}"))
}

// ---------------------------------------------------------------- data prep

fn random_cell(rng: &mut ChaCha8Rng, kind: ColumnKind, allowed: &[String]) -> Value {
    match kind {
        ColumnKind::Numeric => Value::Number((rng.random_range(0.0..100.0f64) * 100.0).round() / 100.0),
        ColumnKind::Boolean => Value::Bool(rng.random_bool(0.5)),
        ColumnKind::Categorical => Value::Text(allowed[rng.random_range(0..allowed.len())].clone()),
    }
}

fn random_row_set(rng: &mut ChaCha8Rng) -> Dataset {
    let schema = reference_schema();
    let n = rng.random_range(0..30);
    let rows: Vec<Row> = (0..n)
        .map(|r| {
            schema
                .columns()
                .iter()
                .map(|c| {
                    if c.name == SERIAL_COLUMN {
                        Some(Value::Number((r + 1) as f64))
                    } else if rng.random_bool(0.08) {
                        None
                    } else {
                        Some(random_cell(rng, c.kind, &c.allowed_values))
                    }
                })
                .collect()
        })
        .collect();
    Dataset::new(schema, rows).expect("random rows fit the schema")
}

type Record = BTreeMap<String, Option<Value>>;

fn records(ds: &Dataset) -> Vec<Record> {
    ds.rows()
        .iter()
        .map(|row| ds.schema().names().map(str::to_string).zip(row.iter().cloned()).collect())
        .collect()
}

/// Keep rows whose flag equals the wanted type, keep columns common to both
/// types or specific to the wanted type, drop the flag.
fn brute_force(ds: &Dataset, t: ObjectType) -> (BTreeSet<String>, Vec<Record>) {
    let other_only = match t {
        ObjectType::BoilerHouse => reconplan_core::schema::Applicability::CgpOnly,
        ObjectType::CogenerationPlant => reconplan_core::schema::Applicability::BoilerHouseOnly,
    };
    let columns: BTreeSet<String> = ds
        .schema()
        .columns()
        .iter()
        .filter(|c| c.name != TYPE_COLUMN && c.applicability != other_only)
        .map(|c| c.name.clone())
        .collect();
    let wanted = Some(Value::Bool(t == ObjectType::CogenerationPlant));
    let rows = records(ds)
        .into_iter()
        .filter(|r| r[TYPE_COLUMN] == wanted)
        .map(|r| r.into_iter().filter(|(k, _)| columns.contains(k)).collect())
        .collect();
    (columns, rows)
}

fn redistribution_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut nonempty = 0;
    for case in 0..200 {
        let ds = random_row_set(&mut rng);
        let flag = ds.schema().index_of(TYPE_COLUMN).unwrap();
        let flagged = ds.rows().iter().filter(|r| r[flag].is_some()).count();
        let mut total = 0;
        for t in [ObjectType::BoilerHouse, ObjectType::CogenerationPlant] {
            let (columns, expected) = brute_force(&ds, t);
            match redistribute(&ds, t) {
                Ok(out) => {
                    nonempty += 1;
                    let got: BTreeSet<String> = out.schema().names().map(str::to_string).collect();
                    ensure(got == columns, || format!("case {case} {t}: column set differs"))?;
                    ensure(records(&out) == expected, || format!("case {case} {t}: rows differ"))?;
                    let again = redistribute(&out, t).map_err(|e| e.to_string())?;
                    ensure(records(&again) == records(&out) && again.schema() == out.schema(), || {
                        format!("case {case} {t}: not idempotent")
                    })?;
                    ensure(out.schema().index_of(TARGET_COLUMN).is_some(), || {
                        format!("case {case} {t}: target dropped")
                    })?;
                    total += out.len();
                }
                Err(Error::EmptyResult(_)) => {
                    ensure(expected.is_empty(), || format!("case {case} {t}: rows were expected"))?
                }
                Err(e) => return Err(format!("case {case} {t}: {e}")),
            }
        }
        ensure(total == flagged, || format!("case {case}: {total} rows kept of {flagged} flagged"))?;
    }
    Ok(format!("200 row sets, {nonempty} non-empty redistributions"))
}

fn split_properties() -> Check {
    let serials = |d: &Dataset| -> Vec<u64> {
        d.rows().iter().map(|r| r[0].as_ref().and_then(Value::as_f64).unwrap() as u64).collect()
    };
    for n in 2..=100 {
        let ds = generate_synthetic(n, 1000 + n as u64, 0.0).map_err(|e| e.to_string())?;
        let (a, b) = split(&ds, 0.75, 5).map_err(|e| e.to_string())?;
        let want = (0.75 * n as f64).floor() as usize;
        ensure(a.len() == want && b.len() == n - want && train_size(n, 0.75) == want, || {
            format!("n = {n}: sizes {}/{}", a.len(), b.len())
        })?;
        let sa: BTreeSet<u64> = serials(&a).into_iter().collect();
        let sb: BTreeSet<u64> = serials(&b).into_iter().collect();
        let all: BTreeSet<u64> = serials(&ds).into_iter().collect();
        ensure(sa.is_disjoint(&sb), || format!("n = {n}: overlap"))?;
        ensure(sa.union(&sb).copied().collect::<BTreeSet<_>>() == all, || format!("n = {n}: rows lost"))?;
        let (a2, b2) = split(&ds, 0.75, 5).map_err(|e| e.to_string())?;
        ensure(serials(&a2) == serials(&a) && serials(&b2) == serials(&b), || {
            format!("n = {n}: not deterministic")
        })?;
    }
    let ds = generate_synthetic(100, 3, 0.0).map_err(|e| e.to_string())?;
    let (a, b) = split(&ds, 0.75, 0).map_err(|e| e.to_string())?;
    ensure((a.len(), b.len()) == (75, 25), || format!("N = 100 gave {}/{}", a.len(), b.len()))?;
    Ok("N = 2..100 partitioned, N = 100 gives 75/25".into())
}

// ---------------------------------------------------------------- decisions

fn feature_values(model: &TrainedModel, row: &Row) -> BTreeMap<String, Value> {
    model
        .schema
        .columns()
        .iter()
        .zip(row)
        .filter(|(c, _)| !c.is_target)
        .map(|(c, v)| (c.name.clone(), v.clone().expect("clean row")))
        .collect()
}

fn decision_optimality() -> Check {
    let raw = generate_synthetic(100, 42, 0.02).map_err(|e| e.to_string())?;
    let out = run_pipeline(&raw, &PipelineConfig::new(ObjectType::BoilerHouse, 42))
        .map_err(|e| e.to_string())?;
    let model = out.model;
    let numeric: Vec<String> = model
        .schema
        .columns()
        .iter()
        .filter(|c| c.kind == ColumnKind::Numeric && !c.is_target)
        .map(|c| c.name.clone())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (mut selected, mut none) = (0, 0);
    for case in 0..100 {
        let base_row = &out.test.rows()[rng.random_range(0..out.test.len())];
        let fixed = feature_values(&model, base_row);
        let mut scenario = Scenario::new(ObjectType::BoilerHouse);
        scenario.fixed_values = fixed.clone();
        for _ in 0..rng.random_range(0..3) {
            let col = numeric[rng.random_range(0..numeric.len())].clone();
            let v = fixed[&col].as_f64().unwrap();
            scenario.limits.insert(
                col,
                Limit {
                    min: Some(v * rng.random_range(0.6..1.0)),
                    max: Some(v * rng.random_range(1.0..1.4) + 0.5),
                    allowed: None,
                },
            );
        }
        let candidates: Vec<Candidate> = (0..rng.random_range(1..=10))
            .map(|i| {
                let overrides = (0..rng.random_range(0..4))
                    .map(|_| {
                        let col = numeric[rng.random_range(0..numeric.len())].clone();
                        let v = fixed[&col].as_f64().unwrap() * rng.random_range(0.4..1.6);
                        (col, Value::Number(v))
                    })
                    .collect();
                Candidate { id: format!("c{i}"), overrides }
            })
            .collect();

        let mut best: Option<(&str, f64)> = None;
        for c in &candidates {
            let mut values = fixed.clone();
            values.extend(c.overrides.clone());
            let feasible = scenario.limits.iter().all(|(col, l)| {
                let v = values[col].as_f64().unwrap();
                l.min.is_none_or(|lo| v >= lo) && l.max.is_none_or(|hi| v <= hi)
            });
            if feasible {
                let p = model.predict_values(&values).map_err(|e| e.to_string())?;
                if best.is_none_or(|(_, b)| p < b) {
                    best = Some((&c.id, p));
                }
            }
        }
        let report = decide(&model, &scenario, &candidates).map_err(|e| e.to_string())?;
        match best {
            Some((id, p)) => {
                selected += 1;
                ensure(
                    report.status == DecisionStatus::Selected
                        && report.selected_candidate.as_deref() == Some(id)
                        && report.selected_mco == Some(p),
                    || format!("case {case}: picked {:?}, brute force {id}", report.selected_candidate),
                )?;
            }
            None => {
                none += 1;
                ensure(report.status == DecisionStatus::NoFeasibleCandidate, || {
                    format!("case {case}: expected no feasible candidate")
                })?;
            }
        }
    }
    Ok(format!("100 scenarios ({selected} with a selection, {none} without)"))
}

// ---------------------------------------------------------------- end to end

fn reconplan(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_reconplan"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

/// Writes scenario and candidate files derived from the generated data.
fn write_whatif_inputs(dir: &Path) -> Result<(Json, Json), String> {
    let raw = generate_synthetic(100, 42, 0.02).map_err(|e| e.to_string())?;
    let flag = raw.schema().index_of(TYPE_COLUMN).ok_or("no type column")?;
    let row = raw
        .rows()
        .iter()
        .find(|r| r[flag] == Some(Value::Bool(false)))
        .ok_or("no boiler-house row")?;
    let fixed: BTreeMap<String, Value> = raw
        .schema()
        .columns()
        .iter()
        .zip(row)
        .filter(|(c, _)| ![SERIAL_COLUMN, TYPE_COLUMN, TARGET_COLUMN].contains(&c.name.as_str()))
        .filter_map(|(c, v)| v.clone().map(|v| (c.name.clone(), v)))
        .collect();
    let scenario = json!({
        "object_type": "boiler_house",
        "fixed_values": fixed,
        "limits": {"effBoil": {"min": 86.0}, "fuel": {"allowed": ["gas", "biomass"]}},
        "label": "replace boilers, keep the heat network"
    });
    let candidates = json!([
        {"id": "status-quo", "overrides": {}},
        {"id": "gas-efficient", "overrides": {"fuel": "gas", "effBoil": 92.0, "hasEconomizer": 1}},
        {"id": "biomass", "overrides": {"fuel": "biomass", "effBoil": 88.0}},
        {"id": "coal-cheap", "overrides": {"fuel": "coal", "effBoil": 90.0}},
        {"id": "gas-basic", "overrides": {"fuel": "gas", "effBoil": 86.5}}
    ]);
    std::fs::write(dir.join("scenario.json"), scenario.to_string()).map_err(|e| e.to_string())?;
    std::fs::write(dir.join("candidates.json"), candidates.to_string()).map_err(|e| e.to_string())?;
    Ok((scenario, candidates))
}

struct CliRun {
    data: Vec<u8>,
    model: Vec<u8>,
    report: Vec<u8>,
    train_stdout: String,
}

fn cli_run(dir: &Path) -> Result<CliRun, String> {
    reconplan(dir, &["generate-data", "--rows", "100", "--seed", "42", "--noise", "0.02", "--out", "data.csv"])?;
    let train_stdout = reconplan(
        dir,
        &["train", "--data", "data.csv", "--type", "boiler_house", "--seed", "42", "--out", "model.json"],
    )?;
    write_whatif_inputs(dir)?;
    reconplan(
        dir,
        &["whatif", "--model", "model.json", "--scenario", "scenario.json",
          "--candidates", "candidates.json", "--out", "report.json"],
    )?;
    let read = |f: &str| std::fs::read(dir.join(f)).map_err(|e| e.to_string());
    Ok(CliRun {
        data: read("data.csv")?,
        model: read("model.json")?,
        report: read("report.json")?,
        train_stdout,
    })
}

fn end_to_end_determinism() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ra = cli_run(a.path())?;
    let rb = cli_run(b.path())?;
    ensure(ra.data == rb.data, || "data files differ".into())?;
    ensure(ra.model == rb.model, || "model files differ".into())?;
    ensure(ra.report == rb.report, || "reports differ".into())?;
    ensure(ra.train_stdout == rb.train_stdout, || "train output differs".into())?;
    Ok(format!("model {} bytes, report {} bytes identical", ra.model.len(), ra.report.len()))
}

fn cli_api_equivalence() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cli = cli_run(dir.path())?;
    let cli_train: Json = serde_json::from_str(&cli.train_stdout).map_err(|e| e.to_string())?;
    let cli_report: Json = serde_json::from_slice(&cli.report).map_err(|e| e.to_string())?;
    let (scenario, candidates) = write_whatif_inputs(dir.path())?;

    let addr: SocketAddr = "127.0.0.1:0".parse().unwrap();
    let state = AppState::open(ServiceConfig::default()).map_err(|e| e.to_string())?;
    let srv = BackgroundServer::start(addr, state).map_err(|e| e.to_string())?;
    let client = reqwest::blocking::Client::new();
    let http = |r: reqwest::Result<reqwest::blocking::Response>| -> Result<Json, String> {
        let r = r.map_err(|e| e.to_string())?;
        let status = r.status();
        let body: Json = r.json().map_err(|e| e.to_string())?;
        ensure(status.is_success(), || format!("HTTP {status}: {body}"))?;
        Ok(body)
    };

    let up = http(client.post(srv.url("/datasets?schema=reference")).body(cli.data.clone()).send())?;
    let trained = http(
        client
            .post(srv.url("/models"))
            .json(&json!({"dataset_id": up["dataset_id"], "object_type": "boiler_house", "seed": 42}))
            .send(),
    )?;
    let model_id = trained["model_id"].as_str().ok_or("no model id")?;
    let api_model = client
        .get(srv.url(&format!("/models/{model_id}")))
        .send()
        .and_then(|r| r.bytes())
        .map_err(|e| e.to_string())?;
    let api_report = http(
        client
            .post(srv.url(&format!("/models/{model_id}/whatif")))
            .json(&json!({"scenario": scenario, "candidates": candidates}))
            .send(),
    )?;

    ensure(trained["metrics"] == cli_train["metrics"], || {
        format!("metrics differ: {} vs {}", trained["metrics"], cli_train["metrics"])
    })?;
    ensure(api_model.as_ref() == cli.model.as_slice(), || "model files differ".into())?;
    ensure(api_report["selected_candidate"] == cli_report["selected_candidate"], || {
        format!("selection {} vs {}", api_report["selected_candidate"], cli_report["selected_candidate"])
    })?;
    ensure(api_report == cli_report, || "reports differ".into())?;
    Ok(format!(
        "selected {}, r2 {:.4} on both paths",
        cli_report["selected_candidate"], cli_train["metrics"]["r2"].as_f64().unwrap_or(f64::NAN)
    ))
}

fn main() {
    let checks: [(&str, CheckFn); 9] = [
        ("r2 + rse = 1 within 1e-9", r2_plus_rse_is_one),
        ("reference pipeline: r2 >= 0.9, rae <= 0.35, < 5 s", reference_pipeline),
        ("gradient matches central differences", gradient_oracle),
        ("metric hand oracle", metric_hand_oracle),
        ("redistribution matches brute-force sets", redistribution_properties),
        ("split sizes, disjointness, determinism", split_properties),
        ("selection is the feasible argmin", decision_optimality),
        ("CLI runs are byte-identical", end_to_end_determinism),
        ("CLI and HTTP agree", cli_api_equivalence),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        match result {
            Ok(detail) => println!("PASS  {:>2}  {name} ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2}  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} acceptance checks passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

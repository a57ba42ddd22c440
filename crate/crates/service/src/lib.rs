//! JSON-over-HTTP front end for the reconstruction planner.
//!
//! Clients upload facility records as CSV, train per-object-type models,
//! and run what-if comparisons and parameter sweeps against them. All
//! state lives in one in-memory session that can optionally be persisted
//! to a JSON file.
//!
//! | method | path                      | purpose                              |
//! |--------|---------------------------|--------------------------------------|
//! | GET    | `/health`                 | liveness                             |
//! | GET    | `/schemas`                | reference schema and type palettes   |
//! | POST   | `/datasets`               | upload CSV (`?schema=reference`)     |
//! | POST   | `/models`                 | train on an uploaded dataset         |
//! | GET    | `/models`                 | list trained models                  |
//! | GET    | `/models/{id}`            | model file                           |
//! | GET    | `/models/{id}/metrics`    | held-out metrics                     |
//! | POST   | `/models/{id}/predict`    | predict one facility                 |
//! | POST   | `/models/{id}/whatif`     | rank candidate configurations        |
//! | POST   | `/models/{id}/curve`      | sweep one parameter (`?format=csv`)  |
//! | POST   | `/scenarios`              | store a scenario                     |
//! | GET    | `/scenarios/{id}`         | fetch a stored scenario              |
//!
//! Errors come back as `{stage, code, column?, row?, message}`.

mod error;
mod state;

use std::collections::BTreeMap;
use std::io;
use std::net::SocketAddr;
use std::thread::JoinHandle;

use axum::extract::rejection::{JsonRejection, QueryRejection, StringRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use reconplan_core::decision::{decide, sweep_parameter};
use reconplan_core::pipeline::AtStage;
use reconplan_core::{
    load_csv, reference_schema, run_pipeline, Candidate, ColumnSpec, HyperparameterOverrides,
    Metrics, ObjectType, PipelineConfig, Scenario, Stage, TrainedModel, Value,
};
use serde::{Deserialize, Serialize};
use tokio::sync::oneshot;

pub use error::ApiError;
pub use state::{AppState, ServiceConfig, Session};

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    let limit = state.config().max_body_bytes;
    Router::new()
        .route("/health", get(health))
        .route("/schemas", get(schemas))
        .route("/datasets", post(upload_dataset))
        .route("/models", post(train_model).get(list_models))
        .route("/models/{id}", get(model_file))
        .route("/models/{id}/metrics", get(model_metrics))
        .route("/models/{id}/predict", post(predict))
        .route("/models/{id}/whatif", post(whatif))
        .route("/models/{id}/curve", post(curve))
        .route("/scenarios", post(store_scenario))
        .route("/scenarios/{id}", get(get_scenario))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

fn persist_failed(e: io::Error) -> ApiError {
    ApiError::new(
        StatusCode::INTERNAL_SERVER_ERROR,
        Stage::Request,
        "IoError",
        format!("saving session state failed: {e}"),
    )
}

fn model(state: &AppState, id: &str) -> ApiResult<TrainedModel> {
    state
        .read()
        .models
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::not_found("model", id))
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

#[derive(Serialize)]
struct SchemaCatalog {
    reference: Vec<ColumnSpec>,
    /// Columns a decision-maker can set for each object type.
    palettes: BTreeMap<&'static str, Vec<ColumnSpec>>,
}

async fn schemas() -> ApiResult<Json<SchemaCatalog>> {
    let reference = reference_schema();
    let mut palettes = BTreeMap::new();
    for t in [ObjectType::BoilerHouse, ObjectType::CogenerationPlant] {
        let cols = reference.for_object_type(t).at(Stage::Request)?;
        palettes.insert(
            t.as_str(),
            cols.columns().iter().filter(|c| !c.is_target).cloned().collect(),
        );
    }
    Ok(Json(SchemaCatalog {
        reference: reference.columns().to_vec(),
        palettes,
    }))
}

#[derive(Deserialize)]
struct UploadQuery {
    schema: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetCreated {
    pub dataset_id: String,
    pub rows: usize,
    pub columns: usize,
}

async fn upload_dataset(
    State(state): State<AppState>,
    query: Result<Query<UploadQuery>, QueryRejection>,
    body: Result<String, StringRejection>,
) -> ApiResult<(StatusCode, Json<DatasetCreated>)> {
    let Query(query) = query?;
    let body = body?;
    match query.schema.as_deref() {
        None | Some("reference") => {}
        Some(other) => {
            return Err(ApiError::bad_request(
                "InvalidSchema",
                format!("unknown schema `{other}`; only `reference` is available"),
            ))
        }
    }
    let ds = load_csv(body.as_bytes(), &reference_schema()).at(Stage::Load)?;
    let (rows, columns) = (ds.len(), ds.schema().len());
    let id = state
        .mutate(|s| {
            let id = s.next_id("ds");
            s.datasets.insert(id.clone(), ds);
            id
        })
        .map_err(persist_failed)?;
    Ok((
        StatusCode::CREATED,
        Json(DatasetCreated {
            dataset_id: id,
            rows,
            columns,
        }),
    ))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRequest {
    pub dataset_id: String,
    pub object_type: ObjectType,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub hyperparameters: HyperparameterOverrides,
    #[serde(default)]
    pub train_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCreated {
    pub model_id: String,
    pub object_type: ObjectType,
    pub metrics: Metrics,
    pub train_rows: usize,
    pub test_rows: usize,
}

async fn train_model(
    State(state): State<AppState>,
    req: Result<Json<TrainRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<ModelCreated>)> {
    let Json(req) = req?;
    let raw = state
        .read()
        .datasets
        .get(&req.dataset_id)
        .cloned()
        .ok_or_else(|| ApiError::not_found("dataset", &req.dataset_id))?;
    let config = PipelineConfig::with_overrides(
        req.object_type,
        req.seed,
        &req.hyperparameters,
        req.train_fraction,
    );
    // training is CPU-bound; keep it off the async workers
    let outcome = tokio::task::spawn_blocking(move || run_pipeline(&raw, &config))
        .await
        .map_err(|e| {
            ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                Stage::Train,
                "Internal",
                e.to_string(),
            )
        })??;
    let (train_rows, test_rows) = (outcome.train.len(), outcome.test.len());
    let metrics = outcome.metrics;
    let id = state
        .mutate(|s| {
            let id = s.next_id("model");
            s.models.insert(id.clone(), outcome.model);
            id
        })
        .map_err(persist_failed)?;
    Ok((
        StatusCode::CREATED,
        Json(ModelCreated {
            model_id: id,
            object_type: req.object_type,
            metrics,
            train_rows,
            test_rows,
        }),
    ))
}

#[derive(Serialize)]
struct ModelSummary {
    model_id: String,
    object_type: ObjectType,
    metrics: Option<Metrics>,
}

async fn list_models(State(state): State<AppState>) -> Json<Vec<ModelSummary>> {
    let session = state.read();
    Json(
        session
            .models
            .iter()
            .map(|(id, m)| ModelSummary {
                model_id: id.clone(),
                object_type: m.object_type,
                metrics: m.metrics,
            })
            .collect(),
    )
}

/// The same bytes `reconplan train --out` writes.
async fn model_file(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let m = model(&state, &id)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], m.to_json()).into_response())
}

async fn model_metrics(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<Metrics>> {
    let m = model(&state, &id)?;
    m.metrics.map(Json).ok_or_else(|| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            Stage::Evaluate,
            "NotFound",
            format!("model `{id}` has no held-out metrics"),
        )
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    pub values: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub predicted_mco: f64,
}

async fn predict(
    State(state): State<AppState>,
    Path(id): Path<String>,
    req: Result<Json<PredictRequest>, JsonRejection>,
) -> ApiResult<Json<Prediction>> {
    let Json(req) = req?;
    let m = model(&state, &id)?;
    let predicted_mco = m.predict_values(&req.values).at(Stage::Predict)?;
    Ok(Json(Prediction { predicted_mco }))
}

/// Either an inline scenario or the id of a stored one.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct ScenarioRef {
    #[serde(default)]
    pub scenario: Option<Scenario>,
    #[serde(default)]
    pub scenario_id: Option<String>,
}

impl ScenarioRef {
    fn resolve(self, state: &AppState) -> ApiResult<Scenario> {
        match (self.scenario, self.scenario_id) {
            (Some(s), None) => Ok(s),
            (None, Some(id)) => state
                .read()
                .scenarios
                .get(&id)
                .cloned()
                .ok_or_else(|| ApiError::not_found("scenario", &id)),
            _ => Err(ApiError::bad_request(
                "BadRequest",
                "give exactly one of `scenario` and `scenario_id`",
            )),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct WhatIfRequest {
    #[serde(flatten)]
    pub scenario: ScenarioRef,
    pub candidates: Vec<Candidate>,
}

async fn whatif(
    State(state): State<AppState>,
    Path(id): Path<String>,
    req: Result<Json<WhatIfRequest>, JsonRejection>,
) -> ApiResult<Json<reconplan_core::DecisionReport>> {
    let Json(req) = req?;
    let m = model(&state, &id)?;
    let scenario = req.scenario.resolve(&state)?;
    let report = decide(&m, &scenario, &req.candidates).at(Stage::Decide)?;
    Ok(Json(report))
}

#[derive(Debug, Clone, Deserialize)]
pub struct CurveRequest {
    #[serde(flatten)]
    pub scenario: ScenarioRef,
    /// Candidate whose overrides form the base point; defaults to none.
    #[serde(default)]
    pub base: Option<Candidate>,
    pub parameter: String,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

#[derive(Deserialize)]
struct CurveQuery {
    format: Option<String>,
}

async fn curve(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<CurveQuery>, QueryRejection>,
    req: Result<Json<CurveRequest>, JsonRejection>,
) -> ApiResult<Response> {
    let Query(query) = query?;
    let Json(req) = req?;
    let m = model(&state, &id)?;
    let scenario = req.scenario.resolve(&state)?;
    let base = req.base.unwrap_or_else(|| Candidate {
        id: "base".into(),
        overrides: BTreeMap::new(),
    });
    let curve = sweep_parameter(&m, &scenario, &base, &req.parameter, req.lo, req.hi, req.steps)
        .at(Stage::Sweep)?;
    match query.format.as_deref() {
        None | Some("json") => Ok(Json(curve).into_response()),
        Some("csv") => Ok(([(header::CONTENT_TYPE, "text/csv")], curve.to_csv()).into_response()),
        Some(other) => Err(ApiError::bad_request(
            "BadRequest",
            format!("unknown format `{other}`; use json or csv"),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioCreated {
    pub scenario_id: String,
}

async fn store_scenario(
    State(state): State<AppState>,
    req: Result<Json<Scenario>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<ScenarioCreated>)> {
    let Json(scenario) = req?;
    let palette = reference_schema()
        .for_object_type(scenario.object_type)
        .at(Stage::Request)?;
    scenario.validate(&palette).at(Stage::Request)?;
    let id = state
        .mutate(|s| {
            let id = s.next_id("scn");
            s.scenarios.insert(id.clone(), scenario);
            id
        })
        .map_err(persist_failed)?;
    Ok((StatusCode::CREATED, Json(ScenarioCreated { scenario_id: id })))
}

async fn get_scenario(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<Scenario>> {
    state
        .read()
        .scenarios
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found("scenario", &id))
}

/// Serves until Ctrl-C.
pub fn serve_blocking(addr: SocketAddr, config: ServiceConfig) -> io::Result<()> {
    let state = AppState::open(config)?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })
}

/// A server running on its own thread; stopped when dropped.
pub struct BackgroundServer {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<io::Result<()>>>,
}

impl BackgroundServer {
    /// Binds `addr` (port 0 picks a free port) and starts serving.
    pub fn start(addr: SocketAddr, state: AppState) -> io::Result<Self> {
        let listener = std::net::TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let (tx, rx) = oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener)?;
                axum::serve(listener, router(state))
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await
            })
        });
        Ok(BackgroundServer {
            addr,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }
}

impl Drop for BackgroundServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

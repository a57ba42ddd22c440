//! The end-to-end training pipeline shared by the CLI and the HTTP service:
//! column selection, redistribution, cleaning, split, normalization,
//! training and held-out evaluation, in that order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{clean_missing, redistribute, select_feature_columns, split, Dataset};
use crate::error::Error;
use crate::metrics::{evaluate, Metrics};
use crate::model::{train, TrainedModel};
use crate::network::Hyperparameters;
use crate::normalize::{encode, fit_normalizer};
use crate::schema::ObjectType;

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Request,
    Load,
    SelectColumns,
    Redistribute,
    CleanMissing,
    Split,
    Normalize,
    Encode,
    Train,
    Evaluate,
    Predict,
    Decide,
    Sweep,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Request => "request",
            Stage::Load => "load",
            Stage::SelectColumns => "select_columns",
            Stage::Redistribute => "redistribute",
            Stage::CleanMissing => "clean_missing",
            Stage::Split => "split",
            Stage::Normalize => "normalize",
            Stage::Encode => "encode",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Predict => "predict",
            Stage::Decide => "decide",
            Stage::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An error tagged with the pipeline stage that produced it.
#[derive(Debug, thiserror::Error)]
#[error("{stage}: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl StageError {
    pub fn new(stage: Stage, source: Error) -> Self {
        StageError { stage, source }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            stage: self.stage,
            code: self.source.code().to_string(),
            column: self.source.column().map(str::to_string),
            row: self.source.row(),
            message: self.source.to_string(),
        }
    }
}

/// Machine-readable error payload shared by the command line and the HTTP
/// service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub stage: Stage,
    pub code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    pub message: String,
}

/// Extension for attaching a stage to core results.
pub trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T, Error> {
    fn at(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|e| StageError::new(stage, e))
    }
}

/// Optional replacements for the default hyperparameters. The seed is
/// supplied separately so one value drives both the split and the network.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperparameterOverrides {
    pub hidden_units: Option<usize>,
    pub learning_rate: Option<f64>,
    pub cycles: Option<usize>,
    pub weight_diameter: Option<f64>,
    pub momentum: Option<f64>,
}

impl HyperparameterOverrides {
    pub fn resolve(&self, seed: u64) -> Hyperparameters {
        let d = Hyperparameters::default();
        Hyperparameters {
            hidden_units: self.hidden_units.unwrap_or(d.hidden_units),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            cycles: self.cycles.unwrap_or(d.cycles),
            weight_diameter: self.weight_diameter.unwrap_or(d.weight_diameter),
            momentum: self.momentum.unwrap_or(d.momentum),
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub object_type: ObjectType,
    pub hyperparameters: Hyperparameters,
    pub train_fraction: f64,
    pub split_seed: u64,
}

impl PipelineConfig {
    /// Default hyperparameters and split, one seed for everything.
    pub fn new(object_type: ObjectType, seed: u64) -> Self {
        PipelineConfig::with_overrides(object_type, seed, &HyperparameterOverrides::default(), None)
    }

    pub fn with_overrides(
        object_type: ObjectType,
        seed: u64,
        overrides: &HyperparameterOverrides,
        train_fraction: Option<f64>,
    ) -> Self {
        PipelineConfig {
            object_type,
            hyperparameters: overrides.resolve(seed),
            train_fraction: train_fraction.unwrap_or(DEFAULT_TRAIN_FRACTION),
            split_seed: seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    /// Trained model with its held-out metrics attached.
    pub model: TrainedModel,
    pub metrics: Metrics,
    pub train: Dataset,
    pub test: Dataset,
}

/// Prepares a raw source dataset for one object type (selection,
/// redistribution and cleaning).
pub fn prepare(raw: &Dataset, object_type: ObjectType) -> Result<Dataset, StageError> {
    let selected = select_feature_columns(raw).at(Stage::SelectColumns)?;
    let typed = redistribute(&selected, object_type).at(Stage::Redistribute)?;
    clean_missing(&typed).at(Stage::CleanMissing)
}

pub fn run_pipeline(raw: &Dataset, config: &PipelineConfig) -> Result<PipelineOutcome, StageError> {
    config.hyperparameters.validate().at(Stage::Request)?;
    let clean = prepare(raw, config.object_type)?;
    let (train_set, test_set) =
        split(&clean, config.train_fraction, config.split_seed).at(Stage::Split)?;
    let normalizer = fit_normalizer(&train_set).at(Stage::Normalize)?;
    let fm = encode(&train_set, &normalizer).at(Stage::Encode)?;
    let mut model = train(
        &fm,
        &config.hyperparameters,
        &normalizer,
        clean.schema(),
        config.object_type,
    )
    .at(Stage::Train)?;
    let metrics = evaluate(&model, &test_set).at(Stage::Evaluate)?;
    model.metrics = Some(metrics);
    Ok(PipelineOutcome {
        model,
        metrics,
        train: train_set,
        test: test_set,
    })
}

//! Decision support for engineering-infrastructure reconstruction programs.
//!
//! Historical facility records are reduced to the columns relevant for one
//! object type (boiler house or cogeneration plant), a single-hidden-layer
//! network is trained to predict specific CO₂ emissions (`mCO`), and the
//! trained model ranks candidate equipment configurations under program
//! limits.

pub mod dataset;
pub mod decision;
pub mod error;
pub mod metrics;
pub mod model;
pub mod network;
pub mod normalize;
pub mod pipeline;
pub mod schema;
pub mod synthetic;

pub use dataset::{clean_missing, load_csv, redistribute, select_feature_columns, split, Dataset, Row};
pub use decision::{
    check_feasibility, decide, rank_candidates, sweep_parameter, Candidate, Curve, CurvePoint,
    DecisionReport, DecisionStatus, Feasibility, Limit, RankedCandidate, Scenario,
};
pub use error::{Error, Result};
pub use metrics::{evaluate, Metrics};
pub use model::{train, TrainedModel};
pub use network::{init_network, loss, Gradients, Hyperparameters, Network};
pub use normalize::{encode, fit_normalizer, FeatureMatrix, Normalizer};
pub use pipeline::{
    run_pipeline, ErrorReport, HyperparameterOverrides, PipelineConfig, PipelineOutcome, Stage,
    StageError,
};
pub use schema::{reference_schema, ColumnKind, ColumnSpec, DatasetSchema, ObjectType, Value};
pub use synthetic::{generate_synthetic, generate_synthetic_with, SyntheticConfig};

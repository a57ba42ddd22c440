//! `reconplan` — train emission models on facility records and rank
//! reconstruction candidates from the command line.
//!
//! Results go to stdout as JSON (or CSV for sweeps). Failures print a JSON
//! error report on stderr and exit with status 1; bad invocations exit
//! with status 2.

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use reconplan_core::decision::{decide, sweep_parameter};
use reconplan_core::pipeline::{prepare, AtStage};
use reconplan_core::synthetic::SyntheticConfig;
use reconplan_core::{
    evaluate, generate_synthetic_with, load_csv, reference_schema, run_pipeline, Candidate,
    Error, HyperparameterOverrides, Metrics, ObjectType, PipelineConfig, Scenario, Stage,
    StageError, TrainedModel, Value,
};
use reconplan_service::ServiceConfig;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "reconplan", version, about = "Reconstruction planning with a neural emission model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a reproducible synthetic facility dataset as CSV.
    GenerateData {
        #[arg(long, default_value_t = 100)]
        rows: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Standard deviation of the Gaussian noise added to mCO.
        #[arg(long, default_value_t = 0.02)]
        noise: f64,
        /// Probability of blanking each cell other than Num and isCGP.
        #[arg(long, default_value_t = 0.0)]
        missing_fraction: f64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a model for one object type and print held-out metrics.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "type", value_enum)]
        object_type: TypeArg,
        /// Seeds the split, the initial weights and the visiting order.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        train_fraction: Option<f64>,
        #[arg(long)]
        hidden_units: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        cycles: Option<usize>,
        #[arg(long)]
        weight_diameter: Option<f64>,
        #[arg(long)]
        momentum: Option<f64>,
        /// Where to write the model file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a saved model on every usable row of a dataset.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Predict mCO for one facility given as a JSON object of column values.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        values: PathBuf,
    },
    /// Rank candidate configurations for a scenario.
    Whatif {
        #[arg(long)]
        model: PathBuf,
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// JSON array of candidates.
        #[arg(long)]
        candidates: PathBuf,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict mCO while one numeric parameter sweeps a range.
    Sweep {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        parameter: String,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Candidate JSON whose overrides define the base point.
        #[arg(long)]
        base: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Print the reference schema as JSON.
    Schema,
    /// Run the HTTP API.
    Serve {
        #[arg(long, env = "RECONPLAN_HOST", default_value = "127.0.0.1")]
        host: String,
        #[arg(long, env = "RECONPLAN_PORT", default_value_t = 8080)]
        port: u16,
        /// Load the session from and save it to this JSON file.
        #[arg(long, env = "RECONPLAN_STATE_FILE")]
        state_file: Option<PathBuf>,
        #[arg(long, env = "RECONPLAN_MAX_BODY_BYTES", default_value_t = 16 * 1024 * 1024)]
        max_body_bytes: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TypeArg {
    #[value(name = "boiler_house", alias = "boiler-house", alias = "bh")]
    BoilerHouse,
    #[value(name = "cogeneration_plant", alias = "cogeneration-plant", alias = "cgp")]
    CogenerationPlant,
}

impl From<TypeArg> for ObjectType {
    fn from(t: TypeArg) -> Self {
        match t {
            TypeArg::BoilerHouse => ObjectType::BoilerHouse,
            TypeArg::CogenerationPlant => ObjectType::CogenerationPlant,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// What `train` prints.
#[derive(Serialize)]
struct TrainSummary {
    object_type: ObjectType,
    metrics: Metrics,
    train_rows: usize,
    test_rows: usize,
    initial_train_loss: f64,
    final_train_loss: f64,
}

fn with_path(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn read(path: &Path, stage: Stage) -> Result<String, StageError> {
    fs::read_to_string(path).map_err(with_path(path)).at(stage)
}

fn write(path: &Path, text: &str) -> Result<(), StageError> {
    fs::write(path, text).map_err(with_path(path)).at(Stage::Request)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, StageError> {
    let text = read(path, Stage::Request)?;
    serde_json::from_str(&text).map_err(Error::from).at(Stage::Request)
}

fn load_model(path: &Path) -> Result<TrainedModel, StageError> {
    TrainedModel::from_json(&read(path, Stage::Load)?).at(Stage::Load)
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn run(command: Command) -> Result<String, StageError> {
    match command {
        Command::GenerateData {
            rows,
            seed,
            noise,
            missing_fraction,
            out,
        } => {
            let cfg = SyntheticConfig {
                missing_fraction,
                ..SyntheticConfig::new(rows, seed, noise)
            };
            let csv = generate_synthetic_with(&cfg).at(Stage::Request)?.to_csv_string();
            match out {
                Some(path) => {
                    write(&path, &csv)?;
                    Ok(String::new())
                }
                None => Ok(csv),
            }
        }
        Command::Train {
            data,
            object_type,
            seed,
            train_fraction,
            hidden_units,
            learning_rate,
            cycles,
            weight_diameter,
            momentum,
            out,
        } => {
            let raw = load_csv(read(&data, Stage::Load)?.as_bytes(), &reference_schema())
                .at(Stage::Load)?;
            let overrides = HyperparameterOverrides {
                hidden_units,
                learning_rate,
                cycles,
                weight_diameter,
                momentum,
            };
            let config =
                PipelineConfig::with_overrides(object_type.into(), seed, &overrides, train_fraction);
            let outcome = run_pipeline(&raw, &config)?;
            write(&out, &outcome.model.to_json())?;
            Ok(pretty(&TrainSummary {
                object_type: outcome.model.object_type,
                metrics: outcome.metrics,
                train_rows: outcome.train.len(),
                test_rows: outcome.test.len(),
                initial_train_loss: outcome.model.initial_train_loss,
                final_train_loss: outcome.model.final_train_loss,
            }))
        }
        Command::Evaluate { model, data } => {
            let model = load_model(&model)?;
            let raw = load_csv(read(&data, Stage::Load)?.as_bytes(), &reference_schema())
                .at(Stage::Load)?;
            let clean = prepare(&raw, model.object_type)?;
            Ok(pretty(&evaluate(&model, &clean).at(Stage::Evaluate)?))
        }
        Command::Predict { model, values } => {
            let model = load_model(&model)?;
            let values: std::collections::BTreeMap<String, Value> = read_json(&values)?;
            let predicted_mco = model.predict_values(&values).at(Stage::Predict)?;
            Ok(pretty(&serde_json::json!({ "predicted_mco": predicted_mco })))
        }
        Command::Whatif {
            model,
            scenario,
            candidates,
            out,
        } => {
            let model = load_model(&model)?;
            let scenario: Scenario = read_json(&scenario)?;
            let candidates: Vec<Candidate> = read_json(&candidates)?;
            let report = pretty(&decide(&model, &scenario, &candidates).at(Stage::Decide)?);
            if let Some(path) = out {
                write(&path, &report)?;
            }
            Ok(report)
        }
        Command::Sweep {
            model,
            scenario,
            parameter,
            lo,
            hi,
            steps,
            base,
            format,
        } => {
            let model = load_model(&model)?;
            let scenario: Scenario = read_json(&scenario)?;
            let base = match base {
                Some(path) => read_json(&path)?,
                None => Candidate {
                    id: "base".into(),
                    overrides: Default::default(),
                },
            };
            let curve = sweep_parameter(&model, &scenario, &base, &parameter, lo, hi, steps)
                .at(Stage::Sweep)?;
            Ok(match format {
                Format::Csv => curve.to_csv(),
                Format::Json => pretty(&curve),
            })
        }
        Command::Schema => Ok(reference_schema().to_json_pretty() + "\n"),
        Command::Serve {
            host,
            port,
            state_file,
            max_body_bytes,
        } => {
            let addr: SocketAddr = format!("{host}:{port}").parse().map_err(|e| {
                StageError::new(
                    Stage::Request,
                    Error::InvalidValue {
                        column: "host".into(),
                        reason: format!("{e}"),
                    },
                )
            })?;
            let config = ServiceConfig {
                max_body_bytes,
                state_file,
            };
            reconplan_service::serve_blocking(addr, config)
                .map_err(Error::from)
                .at(Stage::Request)?;
            Ok(String::new())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            let mut stdout = io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::FAILURE;
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprint!("{}", pretty(&e.report()));
            ExitCode::FAILURE
        }
    }
}

//! Training loop, prediction in original units and the JSON model file.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Row;
use crate::error::{Error, Result};
use crate::metrics::Metrics;
use crate::network::{init_network, loss, Gradients, Hyperparameters, Network};
use crate::normalize::{FeatureMatrix, Normalizer};
use crate::schema::{DatasetSchema, ObjectType, Value, SERIAL_COLUMN, TYPE_COLUMN};

/// Current model file format version.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub object_type: ObjectType,
    /// Column layout of the rows the model accepts (after redistribution).
    pub schema: DatasetSchema,
    pub normalizer: Normalizer,
    pub feature_names: Vec<String>,
    pub hyperparameters: Hyperparameters,
    pub network: Network,
    /// Training loss of the freshly initialized network (normalized units).
    pub initial_train_loss: f64,
    /// Training loss after the last cycle (normalized units).
    pub final_train_loss: f64,
    /// Held-out metrics, when the model came out of the full pipeline.
    #[serde(default)]
    pub metrics: Option<Metrics>,
}

/// Visiting order of the training rows in a given cycle.
pub fn cycle_order(seed: u64, cycle: usize, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cycle as u64 + 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

fn train_loss(net: &Network, fm: &FeatureMatrix) -> Result<f64> {
    let predictions = fm
        .x
        .iter()
        .map(|x| net.output(x))
        .collect::<Result<Vec<_>>>()?;
    loss(&predictions, &fm.d)
}

/// Applies `step = -lr * grad + momentum * previous` to every parameter and
/// stores the step as the new `previous`.
fn apply_step(net: &mut Network, g: &Gradients, previous: &mut Gradients, lr: f64, momentum: f64) {
    let update = |w: &mut f64, g: f64, prev: &mut f64| {
        let step = -lr * g + momentum * *prev;
        *w += step;
        *prev = step;
    };
    for ((w_row, g_row), p_row) in net.w_in.iter_mut().zip(&g.w_in).zip(&mut previous.w_in) {
        for ((w, &g), p) in w_row.iter_mut().zip(g_row).zip(p_row) {
            update(w, g, p);
        }
    }
    for ((w, &g), p) in net.b_in.iter_mut().zip(&g.b_in).zip(&mut previous.b_in) {
        update(w, g, p);
    }
    for ((w, &g), p) in net.w_out.iter_mut().zip(&g.w_out).zip(&mut previous.w_out) {
        update(w, g, p);
    }
    update(&mut net.b_out, g.b_out, &mut previous.b_out);
}

/// Per-sample gradient descent over `hp.cycles` shuffled passes.
///
/// Returns the trained network with its loss before and after training.
pub fn fit_network(fm: &FeatureMatrix, hp: &Hyperparameters) -> Result<(Network, f64, f64)> {
    if fm.x.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if fm.d.len() != fm.x.len() {
        return Err(Error::DimensionMismatch {
            what: "targets",
            expected: fm.x.len(),
            found: fm.d.len(),
        });
    }
    if fm.x.iter().flatten().chain(&fm.d).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteLoss { cycle: 0 });
    }
    let mut net = init_network(fm.n_features(), hp)?;
    let initial = train_loss(&net, fm)?;
    let mut previous = Gradients::zeros_like(&net);
    let mut current = initial;
    for cycle in 0..hp.cycles {
        for i in cycle_order(hp.seed, cycle, fm.n_rows()) {
            let g = net.backprop(&fm.x[i], fm.d[i])?;
            apply_step(&mut net, &g, &mut previous, hp.learning_rate, hp.momentum);
        }
        current = train_loss(&net, fm)?;
        if !current.is_finite() {
            return Err(Error::NonFiniteLoss { cycle: cycle + 1 });
        }
    }
    Ok((net, initial, current))
}

/// Trains a model on an encoded training partition.
pub fn train(
    fm: &FeatureMatrix,
    hp: &Hyperparameters,
    normalizer: &Normalizer,
    schema: &DatasetSchema,
    object_type: ObjectType,
) -> Result<TrainedModel> {
    if fm.feature_names != normalizer.feature_names() {
        return Err(Error::DimensionMismatch {
            what: "feature names",
            expected: normalizer.width(),
            found: fm.n_features(),
        });
    }
    let (network, initial_train_loss, final_train_loss) = fit_network(fm, hp)?;
    Ok(TrainedModel {
        object_type,
        schema: schema.clone(),
        normalizer: normalizer.clone(),
        feature_names: fm.feature_names.clone(),
        hyperparameters: *hp,
        network,
        initial_train_loss,
        final_train_loss,
        metrics: None,
    })
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    schema_fingerprint: String,
    model: TrainedModel,
}

impl TrainedModel {
    /// Predicted target in original units for a row laid out like
    /// [`TrainedModel::schema`]. The target cell is ignored.
    pub fn predict(&self, row: &Row) -> Result<f64> {
        let x = self.normalizer.encode_features(row)?;
        let y = self.network.output(&x)?;
        Ok(self.normalizer.invert_target(y))
    }

    /// Builds a schema-aligned row from named values. `Num` and `isCGP` keys
    /// are tolerated and ignored; any other unknown key is an error.
    pub fn row_from_values(&self, values: &BTreeMap<String, Value>) -> Result<Row> {
        for key in values.keys() {
            if self.schema.index_of(key).is_none() && key != SERIAL_COLUMN && key != TYPE_COLUMN {
                return Err(Error::UnknownColumn(key.clone()));
            }
        }
        self.schema
            .columns()
            .iter()
            .map(|spec| {
                if spec.is_target {
                    return Ok(None);
                }
                let v = values
                    .get(&spec.name)
                    .ok_or_else(|| Error::MissingValue(spec.name.clone()))?;
                spec.coerce(v).map(Some)
            })
            .collect()
    }

    pub fn predict_values(&self, values: &BTreeMap<String, Value>) -> Result<f64> {
        self.predict(&self.row_from_values(values)?)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            schema_fingerprint: self.schema.fingerprint(),
            model: self.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<TrainedModel> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let version = raw.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != MODEL_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let file: ModelFile = serde_json::from_str(text)?;
        let model = file.model;
        let computed = model.schema.fingerprint();
        if computed != file.schema_fingerprint {
            return Err(Error::FingerprintMismatch {
                stored: file.schema_fingerprint,
                computed,
            });
        }
        model.network.validate()?;
        let width = model.normalizer.width();
        if model.feature_names.len() != model.network.n_inputs() || width != model.network.n_inputs()
        {
            return Err(Error::DimensionMismatch {
                what: "model inputs",
                expected: width,
                found: model.network.n_inputs(),
            });
        }
        Ok(model)
    }
}

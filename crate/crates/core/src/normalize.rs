//! Min-max scaling, boolean pass-through and one-hot expansion of facility
//! rows into the `[0, 1]` feature space the network consumes.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Row};
use crate::error::{Error, Result};
use crate::schema::{ColumnKind, DatasetSchema, Value};

/// Observed range of a numeric column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    /// Scales into `[0, 1]`. Values outside the fitted range are clamped; a
    /// constant column maps everything to 0.
    pub fn apply(&self, v: f64) -> f64 {
        if self.max > self.min {
            ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn invert(&self, u: f64) -> f64 {
        self.min + u * (self.max - self.min)
    }

    fn fit(values: impl Iterator<Item = f64>) -> Option<Range> {
        values.fold(None, |acc, v| match acc {
            None => Some(Range { min: v, max: v }),
            Some(r) => Some(Range {
                min: r.min.min(v),
                max: r.max.max(v),
            }),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnScaling {
    Numeric { range: Range },
    Boolean,
    Categorical { categories: Vec<String> },
    Target,
}

impl ColumnScaling {
    fn width(&self) -> usize {
        match self {
            ColumnScaling::Numeric { .. } | ColumnScaling::Boolean => 1,
            ColumnScaling::Categorical { categories } => categories.len(),
            ColumnScaling::Target => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledColumn {
    pub name: String,
    #[serde(flatten)]
    pub scaling: ColumnScaling,
}

/// Per-column scaling fitted on a training partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub columns: Vec<ScaledColumn>,
    pub target: Range,
}

/// Encoded design matrix with normalized targets.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub x: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub feature_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.x.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }
}

/// Fits min/max on `train` only. Category order comes from the schema.
pub fn fit_normalizer(train: &Dataset) -> Result<Normalizer> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let schema = train.schema();
    let numeric_range = |idx: usize| -> Result<Range> {
        let name = &schema.columns()[idx].name;
        let values = train
            .rows()
            .iter()
            .map(|row| {
                row[idx]
                    .as_ref()
                    .and_then(Value::as_f64)
                    .ok_or_else(|| Error::MissingValue(name.clone()))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Range::fit(values.into_iter()).expect("non-empty training set"))
    };

    let mut columns = Vec::with_capacity(schema.len());
    let mut target = None;
    for (idx, spec) in schema.columns().iter().enumerate() {
        let scaling = if spec.is_target {
            target = Some(numeric_range(idx)?);
            ColumnScaling::Target
        } else {
            match spec.kind {
                ColumnKind::Numeric => ColumnScaling::Numeric {
                    range: numeric_range(idx)?,
                },
                ColumnKind::Boolean => ColumnScaling::Boolean,
                ColumnKind::Categorical => ColumnScaling::Categorical {
                    categories: spec.allowed_values.clone(),
                },
            }
        };
        columns.push(ScaledColumn {
            name: spec.name.clone(),
            scaling,
        });
    }
    Ok(Normalizer {
        columns,
        target: target.expect("schema has a target"),
    })
}

impl Normalizer {
    /// Encoded width (number of network inputs).
    pub fn width(&self) -> usize {
        self.columns.iter().map(|c| c.scaling.width()).sum()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.width());
        for col in &self.columns {
            match &col.scaling {
                ColumnScaling::Numeric { .. } | ColumnScaling::Boolean => {
                    names.push(col.name.clone())
                }
                ColumnScaling::Categorical { categories } => {
                    names.extend(categories.iter().map(|c| format!("{}={c}", col.name)))
                }
                ColumnScaling::Target => {}
            }
        }
        names
    }

    fn check_schema(&self, schema: &DatasetSchema) -> Result<()> {
        if schema.len() != self.columns.len() {
            return Err(Error::DimensionMismatch {
                what: "schema columns",
                expected: self.columns.len(),
                found: schema.len(),
            });
        }
        for (spec, col) in schema.columns().iter().zip(&self.columns) {
            if spec.name != col.name {
                return Err(Error::UnknownColumn(spec.name.clone()));
            }
        }
        Ok(())
    }

    /// Encodes the feature cells of one row; the target cell is ignored and
    /// may be missing.
    pub fn encode_features(&self, row: &Row) -> Result<Vec<f64>> {
        if row.len() != self.columns.len() {
            return Err(Error::DimensionMismatch {
                what: "row cells",
                expected: self.columns.len(),
                found: row.len(),
            });
        }
        let mut out = Vec::with_capacity(self.width());
        for (cell, col) in row.iter().zip(&self.columns) {
            if matches!(col.scaling, ColumnScaling::Target) {
                continue;
            }
            let value = cell
                .as_ref()
                .ok_or_else(|| Error::MissingValue(col.name.clone()))?;
            let invalid = |reason: &str| Error::InvalidValue {
                column: col.name.clone(),
                reason: reason.into(),
            };
            match (&col.scaling, value) {
                (ColumnScaling::Numeric { range }, v) => {
                    let v = v.as_f64().ok_or_else(|| invalid("expected a number"))?;
                    out.push(range.apply(v));
                }
                (ColumnScaling::Boolean, Value::Bool(b)) => out.push(if *b { 1.0 } else { 0.0 }),
                (ColumnScaling::Boolean, _) => return Err(invalid("expected a boolean")),
                (ColumnScaling::Categorical { categories }, v) => {
                    let text = v.to_string();
                    let hot = categories.iter().position(|c| *c == text).ok_or_else(|| {
                        Error::UnknownCategory {
                            column: col.name.clone(),
                            value: text.clone(),
                        }
                    })?;
                    out.extend((0..categories.len()).map(|i| if i == hot { 1.0 } else { 0.0 }));
                }
                (ColumnScaling::Target, _) => unreachable!(),
            }
        }
        Ok(out)
    }

    pub fn apply_target(&self, v: f64) -> f64 {
        self.target.apply(v)
    }

    pub fn invert_target(&self, u: f64) -> f64 {
        self.target.invert(u)
    }
}

/// Encodes a clean dataset. Targets are scaled with the target range and
/// returned separately from the features.
pub fn encode(ds: &Dataset, norm: &Normalizer) -> Result<FeatureMatrix> {
    norm.check_schema(ds.schema())?;
    let t = ds.schema().target_index();
    let mut x = Vec::with_capacity(ds.len());
    let mut d = Vec::with_capacity(ds.len());
    for row in ds.rows() {
        x.push(norm.encode_features(row)?);
        let target = row[t]
            .as_ref()
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::MissingValue(ds.schema().target().name.clone()))?;
        d.push(norm.apply_target(target));
    }
    Ok(FeatureMatrix {
        x,
        d,
        feature_names: norm.feature_names(),
    })
}

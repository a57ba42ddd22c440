//! What-if analysis over explicitly proposed equipment configurations.
//!
//! A [`Scenario`] fixes the parameters of equipment that stays in place and
//! sets program limits. Each [`Candidate`] overrides the parameters of the
//! equipment being replaced. Candidates are predicted, checked against the
//! limits, and the feasible ones are ranked by predicted emissions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::Row;
use crate::error::{Error, Result};
use crate::metrics::Metrics;
use crate::model::TrainedModel;
use crate::schema::{ColumnKind, DatasetSchema, ObjectType, Value};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limit {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed: Option<Vec<Value>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub object_type: ObjectType,
    /// Parameters of equipment that is not being replaced.
    #[serde(default)]
    pub fixed_values: BTreeMap<String, Value>,
    /// Program constraints per column.
    #[serde(default)]
    pub limits: BTreeMap<String, Limit>,
    /// Free-text note on the decision-maker's preferences; not used in ranking.
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    #[serde(default)]
    pub overrides: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub candidate_id: String,
    pub predicted_mco: f64,
    pub feasible: bool,
    pub violated_limits: Vec<String>,
    /// 1 is the lowest predicted emission among feasible candidates;
    /// infeasible candidates are unranked.
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub parameter_value: f64,
    pub predicted_mco: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub parameter: String,
    pub points: Vec<CurvePoint>,
    pub scenario_snapshot: Scenario,
}

impl Curve {
    /// Two-column CSV (`<parameter>,predicted_mco`) for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},predicted_mco\n", self.parameter);
        for p in &self.points {
            out.push_str(&format!("{},{}\n", p.parameter_value, p.predicted_mco));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionStatus {
    Selected,
    NoFeasibleCandidate,
}

/// Everything a decision-maker reviews for one what-if request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionReport {
    pub status: DecisionStatus,
    pub selected_candidate: Option<String>,
    pub selected_mco: Option<f64>,
    pub ranked: Vec<RankedCandidate>,
    pub model_metrics: Option<Metrics>,
    pub scenario: Scenario,
}

fn feature_spec<'a>(schema: &'a DatasetSchema, column: &str) -> Result<&'a crate::schema::ColumnSpec> {
    let spec = schema
        .column(column)
        .ok_or_else(|| Error::UnknownColumn(column.to_string()))?;
    if spec.is_target {
        return Err(Error::InvalidValue {
            column: column.to_string(),
            reason: "the target column cannot be set or limited".into(),
        });
    }
    Ok(spec)
}

impl Scenario {
    pub fn new(object_type: ObjectType) -> Self {
        Scenario {
            object_type,
            fixed_values: BTreeMap::new(),
            limits: BTreeMap::new(),
            label: String::new(),
        }
    }

    /// Checks column references, limit bounds and fixed-value types.
    pub fn validate(&self, schema: &DatasetSchema) -> Result<()> {
        for (column, value) in &self.fixed_values {
            feature_spec(schema, column)?.coerce(value)?;
        }
        for (column, limit) in &self.limits {
            let spec = feature_spec(schema, column)?;
            let invalid = |reason: &str| Error::InvalidValue {
                column: column.clone(),
                reason: reason.into(),
            };
            if let (Some(lo), Some(hi)) = (limit.min, limit.max) {
                if lo > hi {
                    return Err(invalid("limit min exceeds max"));
                }
            }
            if (limit.min.is_some() || limit.max.is_some()) && spec.kind == ColumnKind::Categorical
            {
                return Err(invalid("numeric bounds on a categorical column"));
            }
            for v in limit.allowed.iter().flatten() {
                spec.coerce(v)?;
            }
        }
        Ok(())
    }

    /// Fixed values overlaid with the candidate's overrides, type-checked.
    fn merged(&self, schema: &DatasetSchema, candidate: &Candidate) -> Result<BTreeMap<String, Value>> {
        let mut merged = BTreeMap::new();
        for (column, value) in self.fixed_values.iter().chain(&candidate.overrides) {
            let spec = feature_spec(schema, column)?;
            merged.insert(column.clone(), spec.coerce(value)?);
        }
        Ok(merged)
    }

    /// Schema-aligned row for a candidate; every feature column must be covered.
    pub fn merged_row(&self, schema: &DatasetSchema, candidate: &Candidate) -> Result<Row> {
        let merged = self.merged(schema, candidate)?;
        schema
            .columns()
            .iter()
            .map(|spec| {
                if spec.is_target {
                    Ok(None)
                } else {
                    merged
                        .get(&spec.name)
                        .cloned()
                        .map(Some)
                        .ok_or_else(|| Error::MissingValue(spec.name.clone()))
                }
            })
            .collect()
    }
}

/// Checks a candidate's merged values against every scenario limit.
pub fn check_feasibility(
    schema: &DatasetSchema,
    scenario: &Scenario,
    candidate: &Candidate,
) -> Result<Feasibility> {
    let merged = scenario.merged(schema, candidate)?;
    let mut violations = Vec::new();
    for (column, limit) in &scenario.limits {
        let spec = feature_spec(schema, column)?;
        let value = merged
            .get(column)
            .ok_or_else(|| Error::MissingValue(column.clone()))?;
        let mut violated = false;
        if limit.min.is_some() || limit.max.is_some() {
            let v = value.as_f64().ok_or_else(|| Error::InvalidValue {
                column: column.clone(),
                reason: "numeric bounds on a non-numeric value".into(),
            })?;
            violated |= limit.min.is_some_and(|lo| v < lo);
            violated |= limit.max.is_some_and(|hi| v > hi);
        }
        if let Some(allowed) = &limit.allowed {
            let allowed = allowed
                .iter()
                .map(|a| spec.coerce(a))
                .collect::<Result<Vec<_>>>()?;
            violated |= !allowed.contains(value);
        }
        if violated {
            violations.push(column.clone());
        }
    }
    Ok(Feasibility {
        feasible: violations.is_empty(),
        violations,
    })
}

fn check_object_type(model: &TrainedModel, scenario: &Scenario) -> Result<()> {
    if model.object_type != scenario.object_type {
        return Err(Error::ObjectTypeMismatch {
            model: model.object_type.to_string(),
            scenario: scenario.object_type.to_string(),
        });
    }
    Ok(())
}

/// Predicts every candidate; feasible ones come first in ascending predicted
/// emissions (ties keep input order), followed by infeasible ones in input order.
pub fn rank_candidates(
    model: &TrainedModel,
    scenario: &Scenario,
    candidates: &[Candidate],
) -> Result<Vec<RankedCandidate>> {
    check_object_type(model, scenario)?;
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    scenario.validate(&model.schema)?;

    let mut scored = Vec::with_capacity(candidates.len());
    for c in candidates {
        let feasibility = check_feasibility(&model.schema, scenario, c)?;
        let predicted = model.predict(&scenario.merged_row(&model.schema, c)?)?;
        scored.push(RankedCandidate {
            candidate_id: c.id.clone(),
            predicted_mco: predicted,
            feasible: feasibility.feasible,
            violated_limits: feasibility.violations,
            rank: None,
        });
    }
    let (mut feasible, infeasible): (Vec<_>, Vec<_>) =
        scored.into_iter().partition(|r| r.feasible);
    // sort_by is stable, so equal predictions keep input order
    feasible.sort_by(|a, b| a.predicted_mco.total_cmp(&b.predicted_mco));
    for (i, r) in feasible.iter_mut().enumerate() {
        r.rank = Some(i + 1);
    }
    feasible.extend(infeasible);
    Ok(feasible)
}

pub fn decide(
    model: &TrainedModel,
    scenario: &Scenario,
    candidates: &[Candidate],
) -> Result<DecisionReport> {
    let ranked = rank_candidates(model, scenario, candidates)?;
    let best = ranked.first().filter(|r| r.rank == Some(1));
    Ok(DecisionReport {
        status: if best.is_some() {
            DecisionStatus::Selected
        } else {
            DecisionStatus::NoFeasibleCandidate
        },
        selected_candidate: best.map(|r| r.candidate_id.clone()),
        selected_mco: best.map(|r| r.predicted_mco),
        model_metrics: model.metrics,
        scenario: scenario.clone(),
        ranked,
    })
}

/// Predicts emissions while one numeric parameter moves over
/// `lo, lo + Δ, …, hi` with `Δ = (hi − lo) / steps`; everything else stays at
/// the base candidate's merged values.
pub fn sweep_parameter(
    model: &TrainedModel,
    scenario: &Scenario,
    base: &Candidate,
    parameter: &str,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Result<Curve> {
    check_object_type(model, scenario)?;
    let idx = model
        .schema
        .index_of(parameter)
        .ok_or_else(|| Error::UnknownColumn(parameter.to_string()))?;
    let spec = &model.schema.columns()[idx];
    if spec.kind != ColumnKind::Numeric || spec.is_target {
        return Err(Error::NonNumericParameter(parameter.to_string()));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi && steps >= 1) {
        return Err(Error::BadRange { lo, hi, steps });
    }
    scenario.validate(&model.schema)?;
    let mut row = scenario.merged_row(&model.schema, base)?;

    let delta = (hi - lo) / steps as f64;
    let mut points = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let v = if k == steps { hi } else { lo + k as f64 * delta };
        if points.last().is_some_and(|p: &CurvePoint| p.parameter_value >= v) {
            return Err(Error::BadRange { lo, hi, steps });
        }
        row[idx] = Some(Value::Number(v));
        points.push(CurvePoint {
            parameter_value: v,
            predicted_mco: model.predict(&row)?,
        });
    }
    Ok(Curve {
        parameter: parameter.to_string(),
        points,
        scenario_snapshot: scenario.clone(),
    })
}

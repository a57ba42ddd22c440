//! Column descriptions for facility datasets.
//!
//! A [`DatasetSchema`] is an ordered list of [`ColumnSpec`] records. The
//! source schema of a facility dataset always carries the serial-number
//! column `Num`, the object-type flag `isCGP` and exactly one numeric target
//! column. Schemas derived by column selection or redistribution drop the
//! first two but keep the target.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Serial-number column; never a feature.
pub const SERIAL_COLUMN: &str = "Num";
/// Object-type flag: 1 for cogeneration plants, 0 for boiler houses.
pub const TYPE_COLUMN: &str = "isCGP";
/// Target column of the reference schema (specific CO₂ emissions).
pub const TARGET_COLUMN: &str = "mCO";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Boolean,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterCategory {
    Technical,
    Environmental,
    EnergyEfficiency,
    EnergySecurity,
    Economic,
    OperationalReliability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Applicability {
    Common,
    CgpOnly,
    BoilerHouseOnly,
}

/// The two facility types a model can be built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectType {
    #[serde(alias = "boiler-house", alias = "BoilerHouse")]
    BoilerHouse,
    #[serde(alias = "cogeneration-plant", alias = "CogenerationPlant", alias = "cgp")]
    CogenerationPlant,
}

impl ObjectType {
    /// Value of the `isCGP` flag for rows of this type.
    pub fn is_cgp(self) -> bool {
        matches!(self, ObjectType::CogenerationPlant)
    }

    pub fn from_is_cgp(flag: bool) -> Self {
        if flag {
            ObjectType::CogenerationPlant
        } else {
            ObjectType::BoilerHouse
        }
    }

    /// Whether a column with the given applicability belongs to this type's data.
    pub fn admits(self, applicability: Applicability) -> bool {
        match applicability {
            Applicability::Common => true,
            Applicability::CgpOnly => self == ObjectType::CogenerationPlant,
            Applicability::BoilerHouseOnly => self == ObjectType::BoilerHouse,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectType::BoilerHouse => "boiler_house",
            ObjectType::CogenerationPlant => "cogeneration_plant",
        }
    }
}

impl fmt::Display for ObjectType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ObjectType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "boiler_house" | "boilerhouse" | "bh" => Ok(ObjectType::BoilerHouse),
            "cogeneration_plant" | "cogenerationplant" | "cgp" | "chp" => {
                Ok(ObjectType::CogenerationPlant)
            }
            other => Err(format!(
                "unknown object type `{other}` (expected boiler-house or cogeneration-plant)"
            )),
        }
    }
}

/// A single cell value. Booleans are written as `0`/`1` in CSV and accepted
/// as either `true`/`false` or `0`/`1` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl Value {
    /// Numeric view: numbers as-is, booleans as 0/1, text has none.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Number(v) => Some(*v),
            Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            Value::Text(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => f.write_str(if *b { "1" } else { "0" }),
            Value::Number(v) => write!(f, "{v}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default)]
    pub unit: String,
    pub category: ParameterCategory,
    pub applicability: Applicability,
    #[serde(default)]
    pub is_target: bool,
    #[serde(default)]
    pub allowed_values: Vec<String>,
}

impl ColumnSpec {
    pub fn numeric(name: &str, unit: &str, category: ParameterCategory) -> Self {
        ColumnSpec {
            name: name.to_string(),
            kind: ColumnKind::Numeric,
            unit: unit.to_string(),
            category,
            applicability: Applicability::Common,
            is_target: false,
            allowed_values: Vec::new(),
        }
    }

    pub fn boolean(name: &str, category: ParameterCategory) -> Self {
        ColumnSpec {
            kind: ColumnKind::Boolean,
            ..ColumnSpec::numeric(name, "", category)
        }
    }

    pub fn categorical(name: &str, category: ParameterCategory, allowed: &[&str]) -> Self {
        ColumnSpec {
            kind: ColumnKind::Categorical,
            allowed_values: allowed.iter().map(|s| s.to_string()).collect(),
            ..ColumnSpec::numeric(name, "", category)
        }
    }

    pub fn only(mut self, applicability: Applicability) -> Self {
        self.applicability = applicability;
        self
    }

    pub fn target(mut self) -> Self {
        self.is_target = true;
        self
    }

    /// Parses a CSV field. The empty string is a missing cell.
    pub fn parse_cell(&self, text: &str) -> std::result::Result<Option<Value>, String> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(None);
        }
        let value = match self.kind {
            ColumnKind::Numeric => {
                let v: f64 = text.parse().map_err(|_| "not a number".to_string())?;
                if !v.is_finite() {
                    return Err("not a finite number".into());
                }
                Value::Number(v)
            }
            ColumnKind::Boolean => match text {
                "0" => Value::Bool(false),
                "1" => Value::Bool(true),
                _ => return Err("boolean cells must be 0 or 1".into()),
            },
            ColumnKind::Categorical => {
                if !self.allowed_values.iter().any(|a| a == text) {
                    return Err(format!("not one of {:?}", self.allowed_values));
                }
                Value::Text(text.to_string())
            }
        };
        Ok(Some(value))
    }

    /// Checks a value against this column and normalizes its representation
    /// (e.g. `1` for a boolean column becomes `Bool(true)`).
    pub fn coerce(&self, value: &Value) -> Result<Value> {
        let invalid = |reason: &str| Error::InvalidValue {
            column: self.name.clone(),
            reason: reason.to_string(),
        };
        match (self.kind, value) {
            (ColumnKind::Numeric, Value::Number(v)) if v.is_finite() => Ok(Value::Number(*v)),
            (ColumnKind::Numeric, Value::Text(t)) => match t.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Value::Number(v)),
                _ => Err(invalid("expected a finite number")),
            },
            (ColumnKind::Numeric, _) => Err(invalid("expected a finite number")),
            (ColumnKind::Boolean, Value::Bool(b)) => Ok(Value::Bool(*b)),
            (ColumnKind::Boolean, Value::Number(v)) if *v == 0.0 || *v == 1.0 => {
                Ok(Value::Bool(*v == 1.0))
            }
            (ColumnKind::Boolean, Value::Text(t)) if t == "0" || t == "1" => {
                Ok(Value::Bool(t == "1"))
            }
            (ColumnKind::Boolean, _) => Err(invalid("expected 0/1 or true/false")),
            (ColumnKind::Categorical, Value::Text(t)) => {
                if self.allowed_values.iter().any(|a| a == t) {
                    Ok(Value::Text(t.clone()))
                } else {
                    Err(Error::UnknownCategory {
                        column: self.name.clone(),
                        value: t.clone(),
                    })
                }
            }
            (ColumnKind::Categorical, other) => Err(Error::UnknownCategory {
                column: self.name.clone(),
                value: other.to_string(),
            }),
        }
    }
}

/// Ordered column list. Serializes as a bare JSON array of [`ColumnSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DatasetSchema {
    columns: Vec<ColumnSpec>,
}

impl DatasetSchema {
    /// Builds a schema, checking the structural invariants every schema must
    /// satisfy (unique names, exactly one numeric common target, category
    /// lists present exactly on categorical columns).
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let schema = DatasetSchema { columns };
        schema.validate()?;
        Ok(schema)
    }

    /// Like [`DatasetSchema::new`], and additionally requires the `Num` and
    /// `isCGP` columns of a raw facility dataset.
    pub fn new_source(columns: Vec<ColumnSpec>) -> Result<Self> {
        let schema = DatasetSchema::new(columns)?;
        schema.validate_source()?;
        Ok(schema)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let columns: Vec<ColumnSpec> = serde_json::from_str(text)?;
        DatasetSchema::new_source(columns)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for c in &self.columns {
            if c.name.is_empty() {
                return Err(Error::InvalidSchema("empty column name".into()));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate column `{}`", c.name)));
            }
            let categorical = c.kind == ColumnKind::Categorical;
            if categorical == c.allowed_values.is_empty() {
                return Err(Error::InvalidSchema(format!(
                    "column `{}`: allowed_values must be non-empty exactly for categorical columns",
                    c.name
                )));
            }
            let mut values = std::collections::HashSet::new();
            if !c.allowed_values.iter().all(|v| values.insert(v)) {
                return Err(Error::InvalidSchema(format!(
                    "column `{}`: duplicate allowed value",
                    c.name
                )));
            }
        }
        let targets: Vec<_> = self.columns.iter().filter(|c| c.is_target).collect();
        match targets.as_slice() {
            [t] if t.kind == ColumnKind::Numeric && t.applicability == Applicability::Common => {
                Ok(())
            }
            [t] => Err(Error::InvalidSchema(format!(
                "target `{}` must be numeric and common",
                t.name
            ))),
            _ => Err(Error::InvalidSchema(format!(
                "expected exactly one target column, found {}",
                targets.len()
            ))),
        }
    }

    fn validate_source(&self) -> Result<()> {
        let check = |name: &str, kind: ColumnKind| match self.column(name) {
            Some(c) if c.kind == kind && c.applicability == Applicability::Common && !c.is_target => {
                Ok(())
            }
            Some(_) => Err(Error::InvalidSchema(format!(
                "column `{name}` must be a common {kind:?} non-target column"
            ))),
            None => Err(Error::MissingColumn(name.to_string())),
        };
        check(SERIAL_COLUMN, ColumnKind::Numeric)?;
        check(TYPE_COLUMN, ColumnKind::Boolean)
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn target_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.is_target)
            .expect("validated schema has a target")
    }

    pub fn target(&self) -> &ColumnSpec {
        &self.columns[self.target_index()]
    }

    /// Sub-schema made of the columns at `keep` (ascending indices).
    pub(crate) fn project(&self, keep: &[usize]) -> Result<Self> {
        DatasetSchema::new(keep.iter().map(|&i| self.columns[i].clone()).collect())
    }

    /// The columns a dataset of `object_type` keeps after redistribution,
    /// with `Num` and `isCGP` removed.
    pub fn for_object_type(&self, object_type: ObjectType) -> Result<Self> {
        let keep: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| {
                c.name != SERIAL_COLUMN && c.name != TYPE_COLUMN && object_type.admits(c.applicability)
            })
            .map(|(i, _)| i)
            .collect();
        self.project(&keep)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("schema serializes");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// The built-in 56-column facility schema used by the synthetic generator
/// and as the default for uploads.
///
/// Only `Num`, `isCGP`, `fuel`, `sumPumpPow`, `anNOxEm`, `numTurb`,
/// `eeBoilCGP`, `weathReg` and `avgTempOutBH` come from the original facility
/// survey; the remaining columns are stand-ins chosen per parameter block.
pub fn reference_schema() -> DatasetSchema {
    use Applicability::{BoilerHouseOnly as BH, CgpOnly as CGP};
    use ParameterCategory::*;

    let classes = ["A", "B", "C", "D"];
    let columns = vec![
        // technical and technological
        ColumnSpec::numeric(SERIAL_COLUMN, "", Technical),
        ColumnSpec::boolean(TYPE_COLUMN, Technical),
        ColumnSpec::categorical("fuel", Technical, &["gas", "coal", "fuel_oil", "biomass"]),
        ColumnSpec::numeric("totHeatPow", "MW", Technical),
        ColumnSpec::numeric("numPumps", "pcs", Technical),
        ColumnSpec::numeric("sumPumpPow", "kW", Technical),
        ColumnSpec::numeric("numBoil", "pcs", Technical),
        ColumnSpec::numeric("equipAge", "years", Technical),
        ColumnSpec::numeric("anSpecFuelGen", "kg c.e./Gcal", Technical),
        ColumnSpec::numeric("pipeLen", "km", Technical),
        ColumnSpec::numeric("avgPipeDiam", "mm", Technical),
        ColumnSpec::numeric("heatLossNet", "%", Technical),
        // environmental
        ColumnSpec::numeric(TARGET_COLUMN, "t CO2/MWh", Environmental).target(),
        ColumnSpec::numeric("anCOEm", "t/year", Environmental),
        ColumnSpec::numeric("anSOEm", "t/year", Environmental),
        ColumnSpec::numeric("anNOxEm", "g/GJ", Environmental),
        ColumnSpec::numeric("anPMEm", "t/year", Environmental),
        ColumnSpec::numeric("flueGasTemp", "degC", Environmental),
        ColumnSpec::boolean("hasFlueCleaning", Environmental),
        // energy efficiency
        ColumnSpec::numeric("effBoil", "%", EnergyEfficiency),
        ColumnSpec::categorical("eePumpClass", EnergyEfficiency, &classes),
        ColumnSpec::numeric("specFuelProd", "kg c.e./Gcal", EnergyEfficiency),
        ColumnSpec::numeric("specElPump", "kWh/Gcal", EnergyEfficiency),
        ColumnSpec::boolean("hasVfd", EnergyEfficiency),
        ColumnSpec::numeric("insulIndex", "", EnergyEfficiency),
        ColumnSpec::boolean("hasEconomizer", EnergyEfficiency),
        // energy security
        ColumnSpec::numeric("sumBackupPumpPow", "kW", EnergySecurity),
        ColumnSpec::numeric("accumTankVol", "m3", EnergySecurity),
        ColumnSpec::numeric("fuelReserveDays", "days", EnergySecurity),
        ColumnSpec::numeric("numFuelSources", "pcs", EnergySecurity),
        ColumnSpec::boolean("hasBackupPower", EnergySecurity),
        // economic
        ColumnSpec::numeric("heatCost", "UAH/Gcal", Economic),
        ColumnSpec::numeric("anHeatRelease", "thousand Gcal/year", Economic),
        ColumnSpec::numeric("anMaintCost", "thousand UAH/year", Economic),
        ColumnSpec::numeric("heatTariff", "UAH/Gcal", Economic),
        ColumnSpec::numeric("staffCount", "persons", Economic),
        ColumnSpec::numeric("anFuelCost", "million UAH/year", Economic),
        // operational reliability
        ColumnSpec::numeric("techReadyCoef", "", OperationalReliability),
        ColumnSpec::boolean("hasPipeCoating", OperationalReliability),
        ColumnSpec::numeric("failuresPerYear", "1/year", OperationalReliability),
        ColumnSpec::numeric("avgRepairTime", "h", OperationalReliability),
        ColumnSpec::numeric("mtbf", "h", OperationalReliability),
        ColumnSpec::numeric("automationLevel", "", OperationalReliability),
        ColumnSpec::numeric("wearPct", "%", OperationalReliability),
        // cogeneration plants only
        ColumnSpec::numeric("numTurb", "pcs", Technical).only(CGP),
        ColumnSpec::categorical("eeBoilCGP", EnergyEfficiency, &classes).only(CGP),
        ColumnSpec::numeric("elPowCGP", "MW", Technical).only(CGP),
        ColumnSpec::numeric("anElGenCGP", "GWh/year", Economic).only(CGP),
        ColumnSpec::numeric("turbEffCGP", "%", EnergyEfficiency).only(CGP),
        ColumnSpec::numeric("heatPowRatioCGP", "", Technical).only(CGP),
        // boiler houses only
        ColumnSpec::boolean("weathReg", EnergyEfficiency).only(BH),
        ColumnSpec::numeric("avgTempOutBH", "degC", Technical).only(BH),
        ColumnSpec::numeric("avgTempRetBH", "degC", Technical).only(BH),
        ColumnSpec::numeric("boilLoadBH", "%", Technical).only(BH),
        ColumnSpec::numeric("chimneyHeightBH", "m", Environmental).only(BH),
        ColumnSpec::boolean("waterTreatBH", OperationalReliability).only(BH),
    ];
    DatasetSchema::new_source(columns).expect("reference schema is valid")
}

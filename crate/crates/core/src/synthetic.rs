//! Reproducible synthetic facility data on the reference schema.
//!
//! Each row is driven by two hidden factors drawn uniformly from `[0, 1]`:
//! equipment wear (0 = new, 1 = worn out) and plant size. Almost every
//! column is a mix of those factors and its own independent noise, so the
//! columns are correlated the way real plant records are (older plants
//! burn more fuel per unit of heat, fail more often, cost more to run).
//! Columns of the other object type are left empty.
//!
//! The target is a closed-form function of six columns, see
//! [`ground_truth_mco`], plus optional Gaussian noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{Dataset, Row};
use crate::error::{Error, Result};
use crate::schema::{
    reference_schema, ColumnKind, DatasetSchema, ObjectType, Value, SERIAL_COLUMN, TARGET_COLUMN,
    TYPE_COLUMN,
};

/// Share of cogeneration plants among generated rows.
pub const CGP_SHARE: f64 = 0.2;

/// Additive emission offsets per fuel, in t CO₂/MWh.
pub const FUEL_OFFSETS: [(&str, f64); 4] = [
    ("gas", 0.0),
    ("coal", 0.015),
    ("fuel_oil", 0.008),
    ("biomass", -0.01),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub rows: usize,
    pub seed: u64,
    pub noise_sd: f64,
    /// Probability that an applicable cell (other than `Num`/`isCGP`) is blanked.
    pub missing_fraction: f64,
}

impl SyntheticConfig {
    pub fn new(rows: usize, seed: u64, noise_sd: f64) -> Self {
        SyntheticConfig {
            rows,
            seed,
            noise_sd,
            missing_fraction: 0.0,
        }
    }
}

/// How a column is derived from the hidden factors.
#[derive(Debug, Clone, Copy)]
enum Recipe {
    /// `lo + (hi - lo) * (|wear|·w + |size|·s + idio·u)` where `w` is the wear
    /// factor (or `1 - wear` for a negative loading) and likewise for size.
    /// Loadings and `idio` sum to 1 so values stay inside `[lo, hi]`.
    Linear {
        lo: f64,
        hi: f64,
        wear: f64,
        size: f64,
        idio: f64,
        decimals: i32,
    },
    /// Set when `|wear|·w + idio·u > 0.5`.
    Flag { wear: f64, idio: f64 },
    /// Class index `floor(4 · (0.8·wear + 0.2·u))`, so worn plants get worse classes.
    Class,
    Fuel,
    Serial,
    TypeFlag,
    Target,
}

const fn lin(lo: f64, hi: f64, wear: f64, size: f64, idio: f64, decimals: i32) -> Recipe {
    Recipe::Linear {
        lo,
        hi,
        wear,
        size,
        idio,
        decimals,
    }
}

fn recipe(name: &str) -> Recipe {
    use Recipe::*;
    match name {
        SERIAL_COLUMN => Serial,
        TYPE_COLUMN => TypeFlag,
        TARGET_COLUMN => Target,
        "fuel" => Fuel,
        "eePumpClass" | "eeBoilCGP" => Class,
        "totHeatPow" => lin(2.0, 120.0, 0.7, 0.25, 0.05, 1),
        "numPumps" => lin(2.0, 14.0, 0.8, 0.1, 0.1, 0),
        "sumPumpPow" => lin(60.0, 900.0, 0.85, 0.1, 0.05, 1),
        "numBoil" => lin(1.0, 8.0, 0.8, 0.1, 0.1, 0),
        "equipAge" => lin(3.0, 45.0, 0.95, 0.0, 0.05, 0),
        "anSpecFuelGen" => lin(150.0, 190.0, 0.9, 0.0, 0.1, 1),
        "pipeLen" => lin(0.5, 40.0, 0.6, 0.3, 0.1, 2),
        "avgPipeDiam" => lin(80.0, 400.0, 0.7, 0.2, 0.1, 0),
        "heatLossNet" => lin(6.0, 24.0, 0.9, 0.0, 0.1, 1),
        "anCOEm" => lin(1.0, 60.0, 0.9, 0.05, 0.05, 2),
        "anSOEm" => lin(0.0, 40.0, 0.9, 0.0, 0.1, 2),
        "anNOxEm" => lin(40.0, 160.0, 0.9, 0.0, 0.1, 1),
        "anPMEm" => lin(0.0, 15.0, 0.9, 0.0, 0.1, 2),
        "flueGasTemp" => lin(110.0, 240.0, 0.9, 0.0, 0.1, 0),
        "hasFlueCleaning" => Flag { wear: -0.7, idio: 0.3 },
        "effBoil" => lin(78.0, 94.0, -0.9, 0.0, 0.1, 1),
        "specFuelProd" => lin(152.0, 196.0, 0.9, 0.0, 0.1, 1),
        "specElPump" => lin(8.0, 40.0, 0.9, 0.0, 0.1, 2),
        "hasVfd" => Flag { wear: -0.75, idio: 0.25 },
        "insulIndex" => lin(0.3, 1.0, -0.9, 0.0, 0.1, 3),
        "hasEconomizer" => Flag { wear: -0.7, idio: 0.3 },
        "sumBackupPumpPow" => lin(20.0, 500.0, 0.8, 0.1, 0.1, 1),
        "accumTankVol" => lin(0.0, 800.0, -0.8, 0.1, 0.1, 0),
        "fuelReserveDays" => lin(3.0, 30.0, -0.8, 0.0, 0.2, 0),
        "numFuelSources" => lin(1.0, 3.0, -0.7, 0.0, 0.3, 0),
        "hasBackupPower" => Flag { wear: -0.6, idio: 0.4 },
        "heatCost" => lin(900.0, 2600.0, 0.9, 0.0, 0.1, 0),
        "anHeatRelease" => lin(5.0, 400.0, -0.6, 0.3, 0.1, 1),
        "anMaintCost" => lin(200.0, 9000.0, 0.85, 0.1, 0.05, 0),
        "heatTariff" => lin(1200.0, 2400.0, 0.8, 0.0, 0.2, 0),
        "staffCount" => lin(5.0, 120.0, 0.6, 0.3, 0.1, 0),
        "anFuelCost" => lin(2.0, 400.0, 0.7, 0.2, 0.1, 1),
        "techReadyCoef" => lin(0.8, 0.99, -0.9, 0.0, 0.1, 3),
        "hasPipeCoating" => Flag { wear: -0.7, idio: 0.3 },
        "failuresPerYear" => lin(0.0, 30.0, 0.9, 0.0, 0.1, 0),
        "avgRepairTime" => lin(2.0, 48.0, 0.9, 0.0, 0.1, 1),
        "mtbf" => lin(200.0, 8000.0, -0.9, 0.0, 0.1, 0),
        "automationLevel" => lin(0.1, 1.0, -0.9, 0.0, 0.1, 2),
        "wearPct" => lin(10.0, 80.0, 0.95, 0.0, 0.05, 1),
        "numTurb" => lin(1.0, 4.0, 0.0, 0.7, 0.3, 0),
        "elPowCGP" => lin(5.0, 200.0, 0.1, 0.8, 0.1, 1),
        "anElGenCGP" => lin(20.0, 1200.0, -0.1, 0.8, 0.1, 1),
        "turbEffCGP" => lin(25.0, 40.0, -0.8, 0.0, 0.2, 1),
        "heatPowRatioCGP" => lin(0.8, 2.5, 0.3, 0.0, 0.7, 2),
        "weathReg" => Flag { wear: -0.75, idio: 0.25 },
        "avgTempOutBH" => lin(70.0, 105.0, 0.85, 0.0, 0.15, 1),
        "avgTempRetBH" => lin(40.0, 65.0, 0.85, 0.0, 0.15, 1),
        "boilLoadBH" => lin(30.0, 90.0, -0.7, 0.1, 0.2, 1),
        "chimneyHeightBH" => lin(15.0, 60.0, 0.5, 0.4, 0.1, 0),
        "waterTreatBH" => Flag { wear: -0.7, idio: 0.3 },
        // unknown columns (custom schemas) get an unstructured numeric spread
        _ => lin(0.0, 1.0, 0.0, 0.0, 1.0, 3),
    }
}

fn loaded(factor: f64, loading: f64) -> f64 {
    if loading >= 0.0 {
        loading * factor
    } else {
        -loading * (1.0 - factor)
    }
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (v * scale).round() / scale
}

fn pick_fuel(wear: f64, u: f64) -> &'static str {
    let weights = [
        ("gas", 0.5),
        ("coal", 0.05 + 0.35 * wear),
        ("fuel_oil", 0.08 + 0.05 * wear),
        ("biomass", 0.3 * (1.0 - wear)),
    ];
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    let mut acc = 0.0;
    for (name, w) in weights {
        acc += w / total;
        if u < acc {
            return name;
        }
    }
    "biomass"
}

fn fuel_offset(fuel: &str) -> Option<f64> {
    FUEL_OFFSETS.iter().find(|(f, _)| *f == fuel).map(|(_, o)| *o)
}

/// Noise-free specific CO₂ emissions (t CO₂/MWh) of a reference-schema row:
///
/// ```text
/// mCO = offset(fuel)
///     + 0.3 · (90 / effBoil) · (1 + heatLossNet / 100)
///     + 0.004 · wearPct
///     + 0.0005 · specElPump
///     − 0.003 · (turbEffCGP − 25)        [cogeneration plants only]
/// ```
///
/// `effBoil`, `heatLossNet` and `turbEffCGP` are percentages; the fuel
/// offsets are listed in [`FUEL_OFFSETS`].
pub fn ground_truth_mco(schema: &DatasetSchema, row: &Row) -> Result<f64> {
    let get = |name: &str| -> Result<&Value> {
        let i = schema
            .index_of(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        row[i]
            .as_ref()
            .ok_or_else(|| Error::MissingValue(name.to_string()))
    };
    let num = |name: &str| -> Result<f64> {
        get(name)?.as_f64().ok_or_else(|| Error::InvalidValue {
            column: name.to_string(),
            reason: "expected a number".into(),
        })
    };
    let fuel = get("fuel")?.to_string();
    let offset = fuel_offset(&fuel).ok_or(Error::UnknownCategory {
        column: "fuel".into(),
        value: fuel,
    })?;
    let mut m = offset
        + 0.3 * (90.0 / num("effBoil")?) * (1.0 + num("heatLossNet")? / 100.0)
        + 0.004 * num("wearPct")?
        + 0.0005 * num("specElPump")?;
    if num(TYPE_COLUMN)? == 1.0 {
        m -= 0.003 * (num("turbEffCGP")? - 25.0);
    }
    Ok(m)
}

/// Generates `rows` records on the reference schema.
pub fn generate_synthetic(rows: usize, seed: u64, noise_sd: f64) -> Result<Dataset> {
    generate_synthetic_with(&SyntheticConfig::new(rows, seed, noise_sd))
}

pub fn generate_synthetic_with(config: &SyntheticConfig) -> Result<Dataset> {
    if !(config.noise_sd >= 0.0 && config.noise_sd.is_finite()) {
        return Err(Error::InvalidValue {
            column: TARGET_COLUMN.into(),
            reason: format!("noise standard deviation {} must be >= 0", config.noise_sd),
        });
    }
    if !(0.0..=1.0).contains(&config.missing_fraction) {
        return Err(Error::InvalidValue {
            column: TARGET_COLUMN.into(),
            reason: format!("missing fraction {} must lie in [0, 1]", config.missing_fraction),
        });
    }
    let schema = reference_schema();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut gaps = ChaCha8Rng::seed_from_u64(config.seed);
    gaps.set_stream(1);

    let mut rows = Vec::with_capacity(config.rows);
    for r in 0..config.rows {
        let wear: f64 = rng.random();
        let size: f64 = rng.random();
        let object_type = ObjectType::from_is_cgp(rng.random::<f64>() < CGP_SHARE);

        let mut row: Row = Vec::with_capacity(schema.len());
        for spec in schema.columns() {
            // one idiosyncratic draw per column keeps the stream layout fixed
            let u: f64 = rng.random();
            let value = match recipe(&spec.name) {
                Recipe::Serial => Value::Number((r + 1) as f64),
                Recipe::TypeFlag => Value::Bool(object_type.is_cgp()),
                Recipe::Target => Value::Number(0.0),
                Recipe::Fuel => Value::Text(pick_fuel(wear, u).to_string()),
                Recipe::Class => {
                    let idx = ((4.0 * (0.8 * wear + 0.2 * u)) as usize).min(3);
                    Value::Text(spec.allowed_values[idx.min(spec.allowed_values.len() - 1)].clone())
                }
                Recipe::Flag { wear: w, idio } => Value::Bool(loaded(wear, w) + idio * u > 0.5),
                Recipe::Linear {
                    lo,
                    hi,
                    wear: w,
                    size: s,
                    idio,
                    decimals,
                } => {
                    let t = loaded(wear, w) + loaded(size, s) + idio * u;
                    Value::Number(round_to(lo + (hi - lo) * t, decimals))
                }
            };
            let value = match (spec.kind, value) {
                (ColumnKind::Categorical, v @ Value::Text(_)) => v,
                (ColumnKind::Categorical, _) => Value::Text(spec.allowed_values[0].clone()),
                (_, v) => v,
            };
            row.push(object_type.admits(spec.applicability).then_some(value));
        }

        let noise: f64 = rng.sample::<f64, _>(StandardNormal);
        let t = schema.target_index();
        row[t] = Some(Value::Number(
            ground_truth_mco(&schema, &row)? + config.noise_sd * noise,
        ));

        if config.missing_fraction > 0.0 {
            for (cell, spec) in row.iter_mut().zip(schema.columns()) {
                let draw: f64 = gaps.random();
                if spec.name != SERIAL_COLUMN
                    && spec.name != TYPE_COLUMN
                    && draw < config.missing_fraction
                {
                    *cell = None;
                }
            }
        }
        rows.push(row);
    }
    Dataset::new(schema, rows)
}

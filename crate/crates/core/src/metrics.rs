use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::TrainedModel;
use crate::schema::Value;

/// Held-out regression metrics in original target units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    /// Relative absolute error: Σ|y−d| / Σ|d̄−d|.
    pub rae: f64,
    /// Relative squared error: Σ(y−d)² / Σ(d̄−d)².
    pub rse: f64,
    /// Coefficient of determination, `1 − rse`.
    pub r2: f64,
    pub n: usize,
}

impl Metrics {
    pub fn from_predictions(predicted: &[f64], actual: &[f64]) -> Result<Metrics> {
        if predicted.len() != actual.len() {
            return Err(Error::DimensionMismatch {
                what: "metric inputs",
                expected: actual.len(),
                found: predicted.len(),
            });
        }
        let n = actual.len();
        if n == 0 {
            return Err(Error::EmptyTestSet);
        }
        let first = actual[0];
        if actual.iter().all(|&d| d == first) {
            return Err(Error::DegenerateTargets);
        }
        let mean = actual.iter().sum::<f64>() / n as f64;
        let (mut abs_err, mut sq_err, mut abs_dev, mut sq_dev) = (0.0, 0.0, 0.0, 0.0);
        for (&y, &d) in predicted.iter().zip(actual) {
            let e = y - d;
            abs_err += e.abs();
            sq_err += e * e;
            abs_dev += (mean - d).abs();
            sq_dev += (mean - d) * (mean - d);
        }
        let mse = sq_err / n as f64;
        let rse = sq_err / sq_dev;
        Ok(Metrics {
            mae: abs_err / n as f64,
            mse,
            rmse: mse.sqrt(),
            rae: abs_err / abs_dev,
            rse,
            r2: 1.0 - rse,
            n,
        })
    }
}

/// Scores `model` on a clean test dataset with the model's column layout.
pub fn evaluate(model: &TrainedModel, test: &Dataset) -> Result<Metrics> {
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let t = test.schema().target_index();
    let mut predicted = Vec::with_capacity(test.len());
    let mut actual = Vec::with_capacity(test.len());
    for row in test.rows() {
        predicted.push(model.predict(row)?);
        actual.push(
            row[t]
                .as_ref()
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::MissingValue(test.schema().target().name.clone()))?,
        );
    }
    Metrics::from_predictions(&predicted, &actual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn perfect_predictions() {
        let m = Metrics::from_predictions(&[1.0, 2.0, 5.0], &[1.0, 2.0, 5.0]).unwrap();
        assert_eq!((m.mae, m.mse, m.rae, m.rse, m.r2), (0.0, 0.0, 0.0, 0.0, 1.0));
    }

    #[test]
    fn three_point_example() {
        // d = (1,2,4): mean 7/3, Σ|d̄−d| = 4/3+1/3+5/3 = 10/3, Σ(d̄−d)² = 16/9+1/9+25/9 = 14/3
        // residuals (0,0,−1): Σ|e| = 1, Σe² = 1
        let m = Metrics::from_predictions(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert_relative_eq!(m.mae, 1.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(m.mse, 1.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(m.rmse, (1.0f64 / 3.0).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(m.rae, 0.3, max_relative = 1e-12);
        assert_relative_eq!(m.rse, 3.0 / 14.0, max_relative = 1e-12);
        assert_relative_eq!(m.r2, 11.0 / 14.0, max_relative = 1e-12);
        assert_eq!(m.n, 3);
    }

    #[test]
    fn degenerate_and_empty() {
        assert!(matches!(
            Metrics::from_predictions(&[1.0, 2.0], &[3.0, 3.0]),
            Err(Error::DegenerateTargets)
        ));
        assert!(matches!(Metrics::from_predictions(&[], &[]), Err(Error::EmptyTestSet)));
    }

    #[test]
    fn serializes_flat() {
        let m = Metrics::from_predictions(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        let v = serde_json::to_value(m).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 7);
        for k in ["mae", "mse", "rmse", "rae", "rse", "r2", "n"] {
            assert!(keys.contains(&k.to_string()));
        }
    }
}

//! Single-hidden-layer regressor: logistic hidden units feeding one linear
//! output neuron, trained on the half sum of squared residuals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Training configuration. Defaults are 60 hidden units, learning rate
/// 0.005, 60 cycles, initial weight diameter 0.1 and no momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub cycles: usize,
    pub weight_diameter: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            hidden_units: 60,
            learning_rate: 0.005,
            cycles: 60,
            weight_diameter: 0.1,
            momentum: 0.0,
            seed: 0,
        }
    }
}

impl Hyperparameters {
    pub fn with_seed(seed: u64) -> Self {
        Hyperparameters {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidHyperparameters(msg.into()));
        if self.hidden_units == 0 {
            return bad("hidden_units must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.cycles == 0 {
            return bad("cycles must be at least 1");
        }
        if !(self.weight_diameter > 0.0 && self.weight_diameter.is_finite()) {
            return bad("weight_diameter must be positive");
        }
        if !(self.momentum >= 0.0 && self.momentum.is_finite()) {
            return bad("momentum must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Logistic,
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    /// Hidden weights, one row of input weights per hidden unit.
    pub w_in: Vec<Vec<f64>>,
    pub b_in: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: f64,
    #[serde(default)]
    pub activation: Activation,
}

/// Loss derivatives laid out like [`Network`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w_in: Vec<Vec<f64>>,
    pub b_in: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: f64,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients {
            w_in: vec![vec![0.0; net.n_inputs()]; net.n_hidden()],
            b_in: vec![0.0; net.n_hidden()],
            w_out: vec![0.0; net.n_hidden()],
            b_out: 0.0,
        }
    }

    /// All entries in a fixed order: `w_in` row-major, `b_in`, `w_out`, `b_out`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.w_in.iter().flatten().copied().collect();
        v.extend(&self.b_in);
        v.extend(&self.w_out);
        v.push(self.b_out);
        v
    }
}

/// Random network with every parameter uniform on
/// `[-diameter/2, diameter/2]`, drawn in `w_in`, `b_in`, `w_out`, `b_out` order.
pub fn init_network(n_features: usize, hp: &Hyperparameters) -> Result<Network> {
    if n_features == 0 {
        return Err(Error::DimensionMismatch {
            what: "network inputs",
            expected: 1,
            found: 0,
        });
    }
    hp.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let half = hp.weight_diameter / 2.0;
    let mut draw = || rng.random_range(-half..=half);
    let h = hp.hidden_units;
    let w_in = (0..h)
        .map(|_| (0..n_features).map(|_| draw()).collect())
        .collect();
    let b_in = (0..h).map(|_| draw()).collect();
    let w_out = (0..h).map(|_| draw()).collect();
    let b_out = draw();
    Ok(Network {
        w_in,
        b_in,
        w_out,
        b_out,
        activation: Activation::Logistic,
    })
}

impl Network {
    /// Checks shape consistency and finiteness.
    pub fn new(w_in: Vec<Vec<f64>>, b_in: Vec<f64>, w_out: Vec<f64>, b_out: f64) -> Result<Self> {
        let net = Network {
            w_in,
            b_in,
            w_out,
            b_out,
            activation: Activation::Logistic,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.w_in.len();
        let f = self.w_in.first().map_or(0, Vec::len);
        if h == 0 || f == 0 {
            return Err(Error::DimensionMismatch {
                what: "network shape",
                expected: 1,
                found: 0,
            });
        }
        let mismatch = |what, found| Error::DimensionMismatch {
            what,
            expected: h,
            found,
        };
        if let Some(row) = self.w_in.iter().find(|r| r.len() != f) {
            return Err(Error::DimensionMismatch {
                what: "hidden weight row",
                expected: f,
                found: row.len(),
            });
        }
        if self.b_in.len() != h {
            return Err(mismatch("hidden biases", self.b_in.len()));
        }
        if self.w_out.len() != h {
            return Err(mismatch("output weights", self.w_out.len()));
        }
        let finite = self
            .w_in
            .iter()
            .flatten()
            .chain(&self.b_in)
            .chain(&self.w_out)
            .chain(std::iter::once(&self.b_out))
            .all(|w| w.is_finite());
        if !finite {
            return Err(Error::InvalidHyperparameters(
                "network contains non-finite weights".into(),
            ));
        }
        Ok(())
    }

    pub fn n_inputs(&self) -> usize {
        self.w_in.first().map_or(0, Vec::len)
    }

    pub fn n_hidden(&self) -> usize {
        self.w_in.len()
    }

    /// Returns the output and the hidden activations.
    pub fn forward(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        if x.len() != self.n_inputs() {
            return Err(Error::DimensionMismatch {
                what: "network inputs",
                expected: self.n_inputs(),
                found: x.len(),
            });
        }
        let hidden: Vec<f64> = self
            .w_in
            .iter()
            .zip(&self.b_in)
            .map(|(w, b)| sigmoid(w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + b))
            .collect();
        let y = self
            .w_out
            .iter()
            .zip(&hidden)
            .map(|(w, h)| w * h)
            .sum::<f64>()
            + self.b_out;
        Ok((y, hidden))
    }

    pub fn output(&self, x: &[f64]) -> Result<f64> {
        self.forward(x).map(|(y, _)| y)
    }

    /// Gradient of `½(y − d)²` for one sample.
    pub fn backprop(&self, x: &[f64], d: f64) -> Result<Gradients> {
        let (y, hidden) = self.forward(x)?;
        let residual = y - d;
        let mut g = Gradients::zeros_like(self);
        g.b_out = residual;
        for (j, &h) in hidden.iter().enumerate() {
            g.w_out[j] = residual * h;
            let delta = residual * self.w_out[j] * h * (1.0 - h);
            g.b_in[j] = delta;
            for (gw, xi) in g.w_in[j].iter_mut().zip(x) {
                *gw = delta * xi;
            }
        }
        Ok(g)
    }
}

/// Half the sum of squared residuals.
pub fn loss(predictions: &[f64], actuals: &[f64]) -> Result<f64> {
    if predictions.len() != actuals.len() || predictions.is_empty() {
        return Err(Error::DimensionMismatch {
            what: "loss inputs",
            expected: predictions.len().max(1),
            found: actuals.len(),
        });
    }
    Ok(0.5
        * predictions
            .iter()
            .zip(actuals)
            .map(|(y, d)| (y - d) * (y - d))
            .sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_outputs_zero() {
        let net = Network::new(vec![vec![0.0; 3]; 4], vec![0.0; 4], vec![0.0; 4], 0.0).unwrap();
        let (y, h) = net.forward(&[0.3, 0.1, 0.9]).unwrap();
        assert_eq!(y, 0.0);
        assert!(h.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn unit_output_weight_passes_half() {
        let net = Network::new(vec![vec![0.0]], vec![0.0], vec![1.0], 0.0).unwrap();
        assert_eq!(net.output(&[0.7]).unwrap(), 0.5);
    }

    #[test]
    fn forward_checks_width() {
        let net = Network::new(vec![vec![0.0; 2]], vec![0.0], vec![1.0], 0.0).unwrap();
        assert!(matches!(
            net.forward(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1, .. })
        ));
    }

    #[test]
    fn loss_examples() {
        assert_eq!(loss(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(loss(&[2.0], &[0.0]).unwrap(), 2.0);
        assert_eq!(loss(&[1.0, 1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert!(loss(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let hp = Hyperparameters::with_seed(11);
        let a = init_network(5, &hp).unwrap();
        assert_eq!(a, init_network(5, &hp).unwrap());
        assert_ne!(a, init_network(5, &Hyperparameters::with_seed(12)).unwrap());
        assert_eq!((a.n_hidden(), a.n_inputs()), (60, 5));
        let all: Vec<f64> = Gradients {
            w_in: a.w_in.clone(),
            b_in: a.b_in.clone(),
            w_out: a.w_out.clone(),
            b_out: a.b_out,
        }
        .flatten();
        assert!(all.iter().all(|w| (-0.05..=0.05).contains(w)));
    }

    #[test]
    fn zero_residual_zero_gradient() {
        let net = init_network(3, &Hyperparameters::with_seed(1)).unwrap();
        let x = [0.2, 0.4, 0.6];
        let y = net.output(&x).unwrap();
        let g = net.backprop(&x, y).unwrap();
        assert!(g.flatten().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn output_gradient_scales_with_residual() {
        let net = init_network(3, &Hyperparameters::with_seed(2)).unwrap();
        let x = [0.1, 0.5, 0.9];
        let y = net.output(&x).unwrap();
        let g1 = net.backprop(&x, y - 0.25).unwrap();
        let g2 = net.backprop(&x, y - 0.5).unwrap();
        for (a, b) in g1.w_out.iter().zip(&g2.w_out) {
            assert!((2.0 * a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let hp = Hyperparameters {
            learning_rate: 0.0,
            ..Default::default()
        };
        assert!(matches!(init_network(2, &hp), Err(Error::InvalidHyperparameters(_))));
        assert!(init_network(0, &Hyperparameters::default()).is_err());
    }
}

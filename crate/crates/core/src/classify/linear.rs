//! Linear SVM (hinge loss) and logistic regression trained by SGD on
//! `(1/n) Σ loss + (l2/2)·‖w‖²`, bias unregularized.
//!
//! The weight vector is stored as `scale · v` during training so the L2
//! shrinkage is O(1) per step and each update only touches the non-zero
//! features of the example.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_labels, ClassifyError, Dataset, FeatureVector, Label, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Hinge,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// One update per example, examples visited in (optionally shuffled) order.
    Sgd,
    /// One update per epoch from the mean gradient over all examples.
    FullBatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConfig {
    pub loss: LossKind,
    pub l2: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub shuffle: bool,
    pub optimizer: Optimizer,
    /// Rescale every feature to unit root-mean-square before training.
    /// The scaling is folded back into the stored weights.
    pub standardize: bool,
}

impl LinearConfig {
    pub fn new(loss: LossKind) -> Self {
        LinearConfig {
            loss,
            l2: 1e-4,
            epochs: 50,
            learning_rate: 0.1,
            seed: 1,
            shuffle: true,
            optimizer: Optimizer::Sgd,
            standardize: false,
        }
    }

    pub fn svm() -> Self {
        LinearConfig::new(LossKind::Hinge)
    }

    pub fn logistic() -> Self {
        LinearConfig::new(LossKind::Logistic)
    }

    fn validate(&self) -> Result<(), ClassifyError> {
        let bad = |m: &str| Err(ClassifyError::InvalidParameter(m.to_string()));
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return bad("l2 must be finite and non-negative");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub(crate) schema: Schema,
    pub(crate) config: LinearConfig,
    pub(crate) weights: Vec<f32>,
    pub(crate) bias: f32,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Loss of a single example at margin input `z = w·x + b` with `y ∈ {-1, +1}`.
pub fn loss_value(kind: LossKind, z: f64, y: f64) -> f64 {
    let m = y * z;
    match kind {
        LossKind::Hinge => (1.0 - m).max(0.0),
        // log(1 + e^-m), stable for large |m|
        LossKind::Logistic => (-m).max(0.0) + (-m.abs()).exp().ln_1p(),
    }
}

/// d loss / d z. For hinge this is the subgradient choosing 0 at the kink.
pub fn loss_derivative(kind: LossKind, z: f64, y: f64) -> f64 {
    match kind {
        LossKind::Hinge => {
            if y * z < 1.0 {
                -y
            } else {
                0.0
            }
        }
        LossKind::Logistic => -y * sigmoid(-y * z),
    }
}

/// Per-example regularized objective `loss(w·x + b, y) + (l2/2)‖w‖²` and its
/// gradient with respect to `(w, b)`, on dense inputs.
pub fn objective_and_grad(kind: LossKind, w: &[f64], b: f64, x: &[f64], y: f64, l2: f64) -> (f64, Vec<f64>, f64) {
    let z: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b;
    let reg: f64 = w.iter().map(|v| v * v).sum::<f64>() * l2 / 2.0;
    let dz = loss_derivative(kind, z, y);
    let grad_w = w.iter().zip(x).map(|(wi, xi)| dz * xi + l2 * wi).collect();
    (loss_value(kind, z, y) + reg, grad_w, dz)
}

fn sign(label: Label) -> f64 {
    match label {
        Label::Travel => 1.0,
        Label::NonTravel => -1.0,
    }
}

fn rms_inverse_scales(data: &Dataset) -> Vec<f64> {
    let d = data.schema.total_dim();
    let mut sq = vec![0.0f64; d];
    for ex in &data.examples {
        ex.features.for_each(|i, x| sq[i] += x * x);
    }
    let n = data.examples.len() as f64;
    sq.into_iter()
        .map(|s| {
            let rms = (s / n).sqrt();
            if rms > 0.0 {
                1.0 / rms
            } else {
                1.0
            }
        })
        .collect()
}

struct ScaledWeights {
    v: Vec<f64>,
    scale: f64,
}

impl ScaledWeights {
    fn dot(&self, x: &FeatureVector, inv: Option<&[f64]>) -> f64 {
        let mut acc = 0.0;
        match inv {
            Some(s) => x.for_each(|i, xi| acc += self.v[i] * xi * s[i]),
            None => x.for_each(|i, xi| acc += self.v[i] * xi),
        }
        acc * self.scale
    }

    fn decay(&mut self, factor: f64) {
        if factor <= 0.0 {
            self.v.iter_mut().for_each(|v| *v = 0.0);
            self.scale = 1.0;
            return;
        }
        self.scale *= factor;
        if self.scale < 1e-9 {
            self.v.iter_mut().for_each(|v| *v *= self.scale);
            self.scale = 1.0;
        }
    }

    fn add(&mut self, step: f64, x: &FeatureVector, inv: Option<&[f64]>) {
        let a = step / self.scale;
        match inv {
            Some(s) => x.for_each(|i, xi| self.v[i] += a * xi * s[i]),
            None => x.for_each(|i, xi| self.v[i] += a * xi),
        }
    }

    fn weights(&self) -> Vec<f64> {
        self.v.iter().map(|v| v * self.scale).collect()
    }
}

pub fn train_linear(data: &Dataset, config: &LinearConfig) -> Result<LinearModel, ClassifyError> {
    config.validate()?;
    check_labels(data)?;
    let d = data.schema.total_dim();
    let n = data.examples.len();
    let inv = config.standardize.then(|| rms_inverse_scales(data));
    let inv = inv.as_deref();
    let ys: Vec<f64> = data.examples.iter().map(|e| sign(e.label)).collect();

    let mut w = ScaledWeights {
        v: vec![0.0; d],
        scale: 1.0,
    };
    let mut bias = 0.0f64;
    let lr0 = config.learning_rate;

    match config.optimizer {
        Optimizer::Sgd => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut order: Vec<usize> = (0..n).collect();
            let mut t = 0u64;
            for _ in 0..config.epochs {
                if config.shuffle {
                    order.shuffle(&mut rng);
                }
                for &i in &order {
                    let lr = lr0 / (1.0 + lr0 * config.l2 * t as f64);
                    let x = &data.examples[i].features;
                    let z = w.dot(x, inv) + bias;
                    let dz = loss_derivative(config.loss, z, ys[i]);
                    w.decay(1.0 - lr * config.l2);
                    if dz != 0.0 {
                        w.add(-lr * dz, x, inv);
                        bias -= lr * dz;
                    }
                    t += 1;
                }
            }
        }
        Optimizer::FullBatch => {
            let mut grad = vec![0.0f64; d];
            for _ in 0..config.epochs {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let mut grad_b = 0.0;
                for (ex, &y) in data.examples.iter().zip(&ys) {
                    let z = w.dot(&ex.features, inv) + bias;
                    let dz = loss_derivative(config.loss, z, y) / n as f64;
                    match inv {
                        Some(s) => ex.features.for_each(|i, xi| grad[i] += dz * xi * s[i]),
                        None => ex.features.for_each(|i, xi| grad[i] += dz * xi),
                    }
                    grad_b += dz;
                }
                let current = w.weights();
                for ((v, g), wi) in w.v.iter_mut().zip(&grad).zip(&current) {
                    *v = wi - lr0 * (g + config.l2 * wi);
                }
                w.scale = 1.0;
                bias -= lr0 * grad_b;
            }
        }
    }

    let mut weights = w.weights();
    if let Some(s) = inv {
        weights.iter_mut().zip(s).for_each(|(w, s)| *w *= s);
    }
    let weights: Vec<f32> = weights.into_iter().map(|w| w as f32).collect();
    if !weights.iter().all(|w| w.is_finite()) || !bias.is_finite() {
        return Err(ClassifyError::Diverged);
    }
    Ok(LinearModel {
        schema: data.schema,
        config: config.clone(),
        weights,
        bias: bias as f32,
    })
}

impl LinearModel {
    /// Builds a model from explicit parameters.
    pub fn from_parameters(
        schema: Schema,
        config: LinearConfig,
        weights: Vec<f32>,
        bias: f32,
    ) -> Result<Self, ClassifyError> {
        if weights.len() != schema.total_dim() {
            return Err(ClassifyError::InvalidParameter(format!(
                "{} weights for a {}-dimensional schema",
                weights.len(),
                schema.total_dim()
            )));
        }
        if !weights.iter().all(|w| w.is_finite()) || !bias.is_finite() {
            return Err(ClassifyError::InvalidParameter("non-finite parameter".into()));
        }
        Ok(LinearModel {
            schema,
            config,
            weights,
            bias,
        })
    }

    pub fn schema(&self) -> Schema {
        self.schema
    }

    pub fn loss(&self) -> LossKind {
        self.config.loss
    }

    pub fn config(&self) -> &LinearConfig {
        &self.config
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn bias(&self) -> f32 {
        self.bias
    }

    pub fn margin(&self, x: &FeatureVector) -> Result<f64, ClassifyError> {
        self.schema.expect(x.schema())?;
        Ok(x.dot_f32(&self.weights) + self.bias as f64)
    }

    /// Raw margin for hinge models, probability for logistic ones.
    pub fn predict_score(&self, x: &FeatureVector) -> Result<f64, ClassifyError> {
        let z = self.margin(x)?;
        Ok(match self.config.loss {
            LossKind::Hinge => z,
            LossKind::Logistic => sigmoid(z),
        })
    }

    pub fn threshold(&self) -> f64 {
        match self.config.loss {
            LossKind::Hinge => 0.0,
            LossKind::Logistic => 0.5,
        }
    }
}

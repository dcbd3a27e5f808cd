//! Multilayer perceptron: sigmoid hidden layers, softmax output, trained by
//! full-batch gradient descent with momentum on mean cross-entropy.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, MinMaxScaler};
use crate::error::{invalid, Error, Result};
use crate::features::{Dataset, FeatureVector, FEATURE_DIM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    pub hidden_sizes: Vec<usize>,
    /// Weight decay on connection weights (not biases).
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            learning_rate: 0.1,
            momentum: 0.9,
            seed: 42,
            hidden_sizes: vec![35],
            l2: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(invalid("epochs must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(invalid(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(invalid(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if self.l2.is_nan() || self.l2 < 0.0 {
            return Err(invalid(format!("l2 must be non-negative, got {}", self.l2)));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(invalid("hidden layer widths must be positive"));
        }
        Ok(())
    }
}

/// A dense layer; `weights` is `outputs x inputs`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn affine(&self, input: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in self.weights.chunks_exact(self.inputs).zip(&self.biases).enumerate() {
            out[o] = b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
        }
    }
}

/// Layer stack without the scaler and labels, so it can be trained and
/// gradient-checked on raw inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = libm::exp(*v - max);
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

impl Network {
    /// All-zero network with the given layer widths (input first, output last).
    pub fn zeros(widths: &[usize]) -> Self {
        Self {
            layers: widths.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        }
    }

    /// Weights and biases drawn uniformly from `[-0.5, 0.5]`.
    pub fn random(widths: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Self::zeros(widths);
        for layer in &mut net.layers {
            for w in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                *w = rng.random_range(-0.5..=0.5);
            }
        }
        net
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("network has layers").outputs
    }

    /// Activations of every layer, input included; the last is the softmax output.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = vec![0.0; layer.outputs];
            layer.affine(&acts[l], &mut z);
            if l == last {
                softmax_in_place(&mut z);
            } else {
                z.iter_mut().for_each(|v| *v = sigmoid(*v));
            }
            acts.push(z);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.activations(x).pop().expect("output layer")
    }

    /// Mean cross-entropy plus `l2/2 * sum w^2`.
    pub fn loss(&self, xs: &[Vec<f64>], ys: &[usize], l2: f64) -> f64 {
        let ce: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| -libm::log(self.forward(x)[y].max(f64::MIN_POSITIVE)))
            .sum::<f64>()
            / xs.len() as f64;
        ce + 0.5 * l2 * self.weight_norm_sqr()
    }

    fn weight_norm_sqr(&self) -> f64 {
        self.layers.iter().flat_map(|l| &l.weights).map(|w| w * w).sum()
    }

    /// Loss and its gradient by backpropagation, gradient shaped like `self`.
    pub fn loss_and_gradient(&self, xs: &[Vec<f64>], ys: &[usize], l2: f64) -> (f64, Network) {
        let n = xs.len() as f64;
        let mut grad = Network::zeros(&self.widths());
        let mut loss = 0.0;
        let last = self.layers.len() - 1;
        for (x, &y) in xs.iter().zip(ys) {
            let acts = self.activations(x);
            loss -= libm::log(acts[last + 1][y].max(f64::MIN_POSITIVE));
            // softmax + cross-entropy: dL/dz = p - onehot
            let mut delta: Vec<f64> = acts[last + 1].clone();
            delta[y] -= 1.0;
            for l in (0..=last).rev() {
                let layer = &self.layers[l];
                let input = &acts[l];
                let g = &mut grad.layers[l];
                for (o, d) in delta.iter().enumerate() {
                    g.biases[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, a) in row.iter_mut().zip(input) {
                        *gw += d * a;
                    }
                }
                if l > 0 {
                    let mut back = vec![0.0; layer.inputs];
                    for (o, d) in delta.iter().enumerate() {
                        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        for (b, w) in back.iter_mut().zip(row) {
                            *b += d * w;
                        }
                    }
                    for (b, a) in back.iter_mut().zip(input) {
                        *b *= a * (1.0 - a);
                    }
                    delta = back;
                }
            }
        }
        for (g, layer) in grad.layers.iter_mut().zip(&self.layers) {
            for (gw, w) in g.weights.iter_mut().zip(&layer.weights) {
                *gw = *gw / n + l2 * w;
            }
            g.biases.iter_mut().for_each(|b| *b /= n);
        }
        (loss / n + 0.5 * l2 * self.weight_norm_sqr(), grad)
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim()];
        w.extend(self.layers.iter().map(|l| l.outputs));
        w
    }

    /// Every weight then bias, layer by layer.
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let mut it = params.iter();
        for l in &mut self.layers {
            for p in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *p = *it.next().expect("parameter count matches");
            }
        }
    }

    /// Runs full-batch gradient descent with momentum, returning the loss before each epoch.
    pub fn train(&mut self, xs: &[Vec<f64>], ys: &[usize], cfg: &TrainConfig) -> Vec<f64> {
        let mut velocity = Network::zeros(&self.widths());
        let mut history = Vec::with_capacity(cfg.epochs);
        for _ in 0..cfg.epochs {
            let (loss, grad) = self.loss_and_gradient(xs, ys, cfg.l2);
            history.push(loss);
            for ((layer, v), g) in self.layers.iter_mut().zip(&mut velocity.layers).zip(&grad.layers) {
                let params = layer.weights.iter_mut().chain(layer.biases.iter_mut());
                let vel = v.weights.iter_mut().chain(v.biases.iter_mut());
                let grads = g.weights.iter().chain(&g.biases);
                for ((p, v), g) in params.zip(vel).zip(grads) {
                    *v = cfg.momentum * *v - cfg.learning_rate * g;
                    *p += *v;
                }
            }
        }
        history
    }
}

/// A trained classifier: scaler, network and class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub class_labels: Vec<String>,
    pub input_dim: usize,
    pub hidden_sizes: Vec<usize>,
    pub network: Network,
    pub scaler: MinMaxScaler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    /// Loss before each epoch.
    pub loss_history: Vec<f64>,
    pub final_loss: f64,
    pub training_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_index: usize,
    pub label: String,
    pub probabilities: Vec<f64>,
}

pub fn train_mlp(train: &Dataset, cfg: &TrainConfig) -> Result<MlpModel> {
    train_mlp_logged(train, cfg).map(|(m, _)| m)
}

pub fn train_mlp_logged(train: &Dataset, cfg: &TrainConfig) -> Result<(MlpModel, TrainLog)> {
    cfg.validate()?;
    train.validate()?;
    let counts = train.class_counts();
    let present = counts.iter().filter(|&&c| c > 0).count();
    if train.classes.len() < 2 || present < 2 {
        return Err(Error::DegenerateDataset(format!(
            "training needs at least two classes with samples, found {present}"
        )));
    }
    for (i, s) in train.samples.iter().enumerate() {
        if let Some(j) = s.features.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "sample {i} ({}) has non-finite feature {j}",
                s.page_id
            )));
        }
    }

    let raw: Vec<&[f64]> = train.samples.iter().map(|s| s.features.values()).collect();
    let scaler = MinMaxScaler::fit(&raw);
    let xs: Vec<Vec<f64>> = raw.iter().map(|r| scaler.transform(r, true)).collect();
    let ys = train.label_indices();

    let mut widths = vec![FEATURE_DIM];
    widths.extend(&cfg.hidden_sizes);
    widths.push(train.classes.len());
    let mut network = Network::random(&widths, cfg.seed);
    let loss_history = network.train(&xs, &ys, cfg);
    let final_loss = network.loss(&xs, &ys, cfg.l2);
    let correct = xs
        .iter()
        .zip(&ys)
        .filter(|(x, &y)| argmax(&network.forward(x)) == y)
        .count();

    let model = MlpModel {
        class_labels: train.classes.clone(),
        input_dim: FEATURE_DIM,
        hidden_sizes: cfg.hidden_sizes.clone(),
        network,
        scaler,
    };
    let log = TrainLog {
        loss_history,
        final_loss,
        training_accuracy: correct as f64 / xs.len() as f64,
    };
    Ok((model, log))
}

impl MlpModel {
    /// Checks that the layer widths chain from the input through the hidden layers to the classes.
    pub fn validate(&self) -> Result<()> {
        let mut expected = vec![self.input_dim];
        expected.extend(&self.hidden_sizes);
        expected.push(self.class_labels.len());
        if self.network.layers.len() + 1 != expected.len() {
            return Err(invalid("layer count does not match hidden sizes"));
        }
        for (layer, w) in self.network.layers.iter().zip(expected.windows(2)) {
            if (layer.inputs, layer.outputs) != (w[0], w[1])
                || layer.weights.len() != w[0] * w[1]
                || layer.biases.len() != w[1]
            {
                return Err(invalid("layer dimensions do not chain"));
            }
        }
        if self.scaler.dim() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: self.scaler.dim(),
            });
        }
        Ok(())
    }

    pub fn predict_values(&self, values: &[f64]) -> Result<Prediction> {
        if values.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: values.len(),
            });
        }
        let probabilities = self.network.forward(&self.scaler.transform(values, true));
        let class_index = argmax(&probabilities);
        Ok(Prediction {
            class_index,
            label: self.class_labels[class_index].clone(),
            probabilities,
        })
    }
}

pub fn predict(model: &MlpModel, fv: &FeatureVector) -> Result<Prediction> {
    model.predict_values(fv.values())
}

//! The model file: a trained MLP plus the extraction settings it was trained under.

use std::fmt;
use std::path::Path;

use scriptid_core::classify::{Layer, MinMaxScaler, MlpModel, Network, TrainConfig};
use scriptid_core::features::ExtractionConfig;
use scriptid_core::gabor::{make_filter_bank, FilterBank, OrientationStep};
use scriptid_core::preprocess::Preprocessing;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::json::to_string_precise;

pub const FORMAT_VERSION: u32 = 1;
pub const FEATURE_CONTRACT: &str = "e/h v1..v5 o0..o5";

/// Everything that determines what a feature vector means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureSettings {
    pub level: u32,
    pub sigma: f64,
    pub kernel_size: usize,
    pub orientation_step: OrientationStep,
    pub preprocessing: Preprocessing,
    pub min_foreground: f64,
}

impl FeatureSettings {
    pub fn extraction(&self) -> ExtractionConfig {
        ExtractionConfig {
            level: self.level,
            preprocessing: self.preprocessing,
            min_foreground: self.min_foreground,
        }
    }

    pub fn bank(&self) -> Result<FilterBank> {
        Ok(make_filter_bank(self.kernel_size, self.sigma, self.orientation_step)?)
    }

    /// Equal in everything except the block filter, which does not change features.
    pub fn same_contract(&self, other: &FeatureSettings) -> bool {
        self.level == other.level
            && self.sigma == other.sigma
            && self.kernel_size == other.kernel_size
            && self.orientation_step == other.orientation_step
            && self.preprocessing == other.preprocessing
    }
}

impl fmt::Display for FeatureSettings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.preprocessing;
        write!(
            f,
            "level={} sigma={} kernel-size={} orientation-step={} polarity={} gabor-input={} smooth-sigma={} smooth-radius={}",
            self.level,
            self.sigma,
            self.kernel_size,
            self.orientation_step.name(),
            p.polarity.name(),
            p.gabor_input.name(),
            p.smooth_sigma,
            p.smooth_radius,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub samples: usize,
    pub final_loss: f64,
    pub training_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub feature_contract: String,
    pub class_labels: Vec<String>,
    pub input_dim: usize,
    pub hidden_sizes: Vec<usize>,
    /// `[min, max]` per input feature.
    pub scaler: Vec<[f64; 2]>,
    /// Per layer, `outputs` rows of `inputs` weights.
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    pub train_config: TrainConfig,
    pub features: FeatureSettings,
    pub training: TrainingSummary,
}

impl ModelFile {
    pub fn new(
        model: &MlpModel,
        train_config: &TrainConfig,
        features: FeatureSettings,
        training: TrainingSummary,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            feature_contract: FEATURE_CONTRACT.into(),
            class_labels: model.class_labels.clone(),
            input_dim: model.input_dim,
            hidden_sizes: model.hidden_sizes.clone(),
            scaler: model.scaler.ranges.iter().map(|&(lo, hi)| [lo, hi]).collect(),
            weights: model
                .network
                .layers
                .iter()
                .map(|l| l.weights.chunks_exact(l.inputs).map(<[f64]>::to_vec).collect())
                .collect(),
            biases: model.network.layers.iter().map(|l| l.biases.clone()).collect(),
            train_config: train_config.clone(),
            features,
            training,
        }
    }

    pub fn to_model(&self) -> Result<MlpModel> {
        let bad = |msg: String| CliError::Format(format!("invalid model file: {msg}"));
        if self.format_version != FORMAT_VERSION {
            return Err(bad(format!("unsupported format_version {}", self.format_version)));
        }
        if self.feature_contract != FEATURE_CONTRACT {
            return Err(bad(format!("unknown feature contract `{}`", self.feature_contract)));
        }
        if self.weights.len() != self.biases.len() {
            return Err(bad("weights and biases list different layer counts".into()));
        }
        let mut layers = Vec::with_capacity(self.weights.len());
        for (i, (rows, biases)) in self.weights.iter().zip(&self.biases).enumerate() {
            let inputs = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != inputs) {
                return Err(bad(format!("layer {i} has ragged weight rows")));
            }
            layers.push(Layer {
                inputs,
                outputs: rows.len(),
                weights: rows.concat(),
                biases: biases.clone(),
            });
        }
        let model = MlpModel {
            class_labels: self.class_labels.clone(),
            input_dim: self.input_dim,
            hidden_sizes: self.hidden_sizes.clone(),
            network: Network { layers },
            scaler: MinMaxScaler {
                ranges: self.scaler.iter().map(|&[lo, hi]| (lo, hi)).collect(),
            },
        };
        model.validate().map_err(|e| bad(e.to_string()))?;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        to_string_precise(self)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
    }
}

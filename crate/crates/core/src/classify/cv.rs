use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{derive_seed, evaluate, kfold_split, train_mlp, EvalReport, KnnModel, TrainConfig};
use crate::error::{Error, Result};
use crate::features::Dataset;

type Predictor = alloc::boxed::Box<dyn Fn(&[f64]) -> Result<(usize, Vec<f64>)>>;

/// Which model is trained on each fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Classifier {
    Mlp(TrainConfig),
    Knn { k: usize },
}

impl Default for Classifier {
    fn default() -> Self {
        Classifier::Mlp(TrainConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub stratify: bool,
    pub classifier: Classifier,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 3,
            seed: 42,
            stratify: true,
            classifier: Classifier::default(),
        }
    }
}

/// Held-out prediction for one dataset sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePrediction {
    pub sample: usize,
    pub fold: usize,
    pub truth: usize,
    pub predicted: usize,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    /// Pooled over every test fold.
    pub aggregate: EvalReport,
    pub folds: Vec<EvalReport>,
    /// Ordered by sample index.
    pub predictions: Vec<SamplePrediction>,
}

/// Trains on each fold's complement and scores the held-out fold.
///
/// The MLP on fold `f` is seeded with a stream derived from `(cfg.seed, f)`,
/// so folds are independent of each other's evaluation order.
pub fn cross_validate(ds: &Dataset, cfg: &CvConfig) -> Result<CvResult> {
    ds.validate()?;
    if ds.classes.len() < 2 {
        return Err(Error::DegenerateDataset(
            "cross-validation needs at least 2 classes".into(),
        ));
    }
    if let Classifier::Mlp(train_cfg) = &cfg.classifier {
        train_cfg.validate()?;
    }
    let folds = kfold_split(ds, cfg.folds, cfg.seed, cfg.stratify)?;
    let labels = ds.label_indices();
    let n_classes = ds.classes.len();

    let mut predictions: Vec<Option<SamplePrediction>> = vec![None; ds.len()];
    let mut fold_reports = Vec::with_capacity(folds.len());
    for (f, fold) in folds.iter().enumerate() {
        let train = ds.subset(&fold.train);
        let predict: Predictor = match &cfg.classifier {
            Classifier::Mlp(tc) => {
                let tc = TrainConfig {
                    seed: derive_seed(cfg.seed, f as u64),
                    ..tc.clone()
                };
                let model = train_mlp(&train, &tc)?;
                alloc::boxed::Box::new(move |v: &[f64]| {
                    let p = model.predict_values(v)?;
                    Ok((p.class_index, p.probabilities))
                })
            }
            Classifier::Knn { k } => {
                let model = KnnModel::fit(&train, *k)?;
                alloc::boxed::Box::new(move |v: &[f64]| model.predict_values(v))
            }
        };

        let (mut t, mut p, mut pr) = (Vec::new(), Vec::new(), Vec::new());
        for &i in &fold.test {
            let (class, probs) = predict(ds.samples[i].features.values())?;
            debug_assert_eq!(probs.len(), n_classes);
            t.push(labels[i]);
            p.push(class);
            pr.push(probs.clone());
            predictions[i] = Some(SamplePrediction {
                sample: i,
                fold: f,
                truth: labels[i],
                predicted: class,
                probabilities: probs,
            });
        }
        fold_reports.push(evaluate(&t, &p, &pr, &ds.classes)?);
    }

    let predictions: Vec<SamplePrediction> = predictions
        .into_iter()
        .map(|p| p.expect("folds partition the dataset"))
        .collect();
    let truth: Vec<usize> = predictions.iter().map(|p| p.truth).collect();
    let predicted: Vec<usize> = predictions.iter().map(|p| p.predicted).collect();
    let probs: Vec<Vec<f64>> = predictions.iter().map(|p| p.probabilities.clone()).collect();
    let aggregate = evaluate(&truth, &predicted, &probs, &ds.classes)?;
    Ok(CvResult {
        aggregate,
        folds: fold_reports,
        predictions,
    })
}

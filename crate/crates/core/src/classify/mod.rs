//! Block classifiers, cross-validation and the evaluation metric suite.

mod cv;
mod kfold;
mod knn;
mod metrics;
mod mlp;
mod scaler;

pub use cv::{cross_validate, Classifier, CvConfig, CvResult, SamplePrediction};
pub use kfold::{kfold_split, Fold};
pub use knn::{knn_predict, KnnModel};
pub use metrics::{evaluate, ClassMetrics, EvalReport, MeanMetrics, TableRow, TABLE_COLUMNS};
pub use mlp::{predict, train_mlp, train_mlp_logged, Layer, MlpModel, Network, Prediction, TrainConfig, TrainLog};
pub use scaler::MinMaxScaler;

/// Index of the first maximum.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// A per-fold seed derived from the run seed.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

//! Evaluation report JSON, console summary and the level-sweep CSV.

use std::path::Path;

use scriptid_core::classify::{Classifier, CvResult, EvalReport};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::model::FeatureSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub level: u32,
    pub sigma: f64,
    pub kernel_size: usize,
    pub orientation_step: String,
    pub seed: u64,
    pub folds: usize,
    pub stratified: bool,
    pub classifier: Classifier,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub metadata: RunMetadata,
    /// Pooled over all test folds.
    pub report: EvalReport,
    pub fold_reports: Vec<EvalReport>,
}

impl ReportFile {
    pub fn new(
        features: &FeatureSettings,
        seed: u64,
        folds: usize,
        stratified: bool,
        classifier: &Classifier,
        cv: CvResult,
    ) -> Self {
        Self {
            metadata: RunMetadata {
                level: features.level,
                sigma: features.sigma,
                kernel_size: features.kernel_size,
                orientation_step: features.orientation_step.name().into(),
                seed,
                folds,
                stratified,
                classifier: classifier.clone(),
                samples: cv.predictions.len(),
            },
            report: cv.aggregate,
            fold_reports: cv.folds,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text =
            serde_json::to_string_pretty(self).map_err(|e| CliError::Format(format!("serializing report: {e}")))?;
        text.push('\n');
        Ok(text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| CliError::io(path, e))
    }
}

/// `Accuracy: 0.9686 (96.86%)`.
pub fn accuracy_line(accuracy: f64) -> String {
    format!("Accuracy: {:.4} ({:.2}%)", accuracy, accuracy * 100.0)
}

/// The summary printed by `eval`: accuracy line, then the per-class table.
pub fn console_summary(report: &EvalReport) -> String {
    format!("{}\n\n{}", accuracy_line(report.accuracy), report.render_table())
}

/// One level of a level sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub level: u32,
    pub n_classes: usize,
    pub n_blocks: usize,
    pub blocks_per_class_min: usize,
    pub blocks_per_class_max: usize,
    pub accuracy: f64,
    pub kappa: f64,
}

pub const SWEEP_HEADER: &str = "level,n_classes,n_blocks,blocks_per_class_min,blocks_per_class_max,accuracy,kappa";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{:.6},{:.6}\n",
            r.level, r.n_classes, r.n_blocks, r.blocks_per_class_min, r.blocks_per_class_max, r.accuracy, r.kappa
        ));
    }
    out
}

//! Sub-band energy and entropy features and labeled block datasets.
//!
//! A block's feature vector holds, for each sub-band `(v, u)` in bank order,
//! its energy at position `2 * (6 (v - 1) + u)` and its entropy right after.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gabor::{bank_index, BankPlan, FilterBank, SubbandResponse, ORIENTATIONS, SCALES, SUBBANDS};
use crate::preprocess::{GaborInput, Preprocessing};
use crate::quadtree::{decompose, foreground_ratio, Block, MAX_LEVEL};
use crate::raster::GrayImage;

pub const FEATURE_DIM: usize = 2 * SUBBANDS;

/// Mean squared magnitude, `(1/P) sum |J|^2`.
pub fn energy(response: &SubbandResponse) -> f64 {
    response.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / response.values.len() as f64
}

/// Shannon entropy (bits) of the normalized squared magnitudes; 0 for an all-zero response.
pub fn entropy(response: &SubbandResponse) -> f64 {
    let total: f64 = response.values.iter().map(|v| v.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let h: f64 = response
        .values
        .iter()
        .map(|v| v.norm_sqr() / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * libm::log2(p))
        .sum();
    h.max(0.0)
}

/// The 60 per-block features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != FEATURE_DIM {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_DIM,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("feature {} is not finite", feature_name(i))));
        }
        Ok(Self(values))
    }

    /// Packs `(energy, entropy)` pairs given in bank order.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().flat_map(|&(e, h)| [e, h]).collect())
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.0.chunks_exact(2).map(|p| (p[0], p[1])).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn energy(&self, scale: usize, orientation: usize) -> f64 {
        self.0[2 * bank_index(scale, orientation)]
    }

    pub fn entropy(&self, scale: usize, orientation: usize) -> f64 {
        self.0[2 * bank_index(scale, orientation) + 1]
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(fv: FeatureVector) -> Self {
        fv.0
    }
}

/// Column name of feature `index`: `e_v{v}_o{u}` or `h_v{v}_o{u}`.
pub fn feature_name(index: usize) -> String {
    let band = index / 2;
    let kind = if index.is_multiple_of(2) { 'e' } else { 'h' };
    format!("{kind}_v{}_o{}", band / ORIENTATIONS + 1, band % ORIENTATIONS)
}

pub fn feature_names() -> Vec<String> {
    (0..FEATURE_DIM).map(feature_name).collect()
}

pub fn features_from_responses(responses: &[SubbandResponse]) -> FeatureVector {
    assert_eq!(responses.len(), SUBBANDS);
    let values = responses.iter().flat_map(|r| [energy(r), entropy(r)]).collect();
    FeatureVector(values)
}

pub fn extract_features(block: &GrayImage, bank: &FilterBank) -> FeatureVector {
    extract_with_plan(block, &bank.plan(block.width(), block.height()))
}

pub fn extract_with_plan(block: &GrayImage, plan: &BankPlan<'_>) -> FeatureVector {
    features_from_responses(&plan.filter(block))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: FeatureVector,
    pub label: String,
    pub page_id: String,
    pub level: u32,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub classes: Vec<String>,
    pub samples: Vec<LabeledSample>,
}

impl Dataset {
    /// Checks that every sample's label is a declared class.
    pub fn new(classes: Vec<String>, samples: Vec<LabeledSample>) -> Result<Self> {
        let ds = Self { classes, samples };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.samples.iter().enumerate() {
            if !self.classes.contains(&s.label) {
                return Err(Error::Data(format!(
                    "sample {i} ({}) has undeclared label `{}`",
                    s.page_id, s.label
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    pub fn label_indices(&self) -> Vec<usize> {
        self.samples
            .iter()
            .map(|s| self.class_index(&s.label).expect("validated label"))
            .collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.classes.len()];
        for i in self.label_indices() {
            counts[i] += 1;
        }
        counts
    }

    /// The samples at `indices`, keeping the class list.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            classes: self.classes.clone(),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }
}

/// Everything that turns a page into block features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub level: u32,
    pub preprocessing: Preprocessing,
    /// Blocks whose ink fraction is below this are dropped. 0 keeps everything.
    pub min_foreground: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            level: 2,
            preprocessing: Preprocessing::default(),
            min_foreground: 0.0,
        }
    }
}

/// Ink pixels are those above this value in the smoothed binary raster.
pub const FOREGROUND_THRESHOLD: f64 = 0.5;

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_LEVEL).contains(&self.level) {
            return Err(Error::InvalidParameter(format!(
                "extraction level must be in [1, {MAX_LEVEL}], got {}",
                self.level
            )));
        }
        if self.min_foreground.is_nan() || self.min_foreground < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "min foreground must be non-negative, got {}",
                self.min_foreground
            )));
        }
        self.preprocessing.validate()
    }
}

/// A block that survived filtering, with its features.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockFeatures {
    pub row: usize,
    pub col: usize,
    pub foreground: f64,
    pub features: FeatureVector,
}

/// Reuses one bank plan per block size.
pub struct PlanCache<'a> {
    bank: &'a FilterBank,
    plans: Vec<BankPlan<'a>>,
}

impl<'a> PlanCache<'a> {
    pub fn new(bank: &'a FilterBank) -> Self {
        Self {
            bank,
            plans: Vec::new(),
        }
    }

    pub fn get(&mut self, width: usize, height: usize) -> &BankPlan<'a> {
        let pos = match self.plans.iter().position(|p| p.block_size() == (width, height)) {
            Some(pos) => pos,
            None => {
                self.plans.push(self.bank.plan(width, height));
                self.plans.len() - 1
            }
        };
        &self.plans[pos]
    }
}

/// Preprocesses, decomposes and featurizes one page.
pub fn extract_page(
    page: &GrayImage,
    page_id: &str,
    cfg: &ExtractionConfig,
    plans: &mut PlanCache<'_>,
) -> Result<Vec<BlockFeatures>> {
    cfg.validate()?;
    let gabor_raster = cfg.preprocessing.prepare(page)?;
    let ink_raster = match cfg.preprocessing.gabor_input {
        GaborInput::SmoothedBinary => None,
        GaborInput::Gray if cfg.min_foreground > 0.0 => Some(
            Preprocessing {
                gabor_input: GaborInput::SmoothedBinary,
                ..cfg.preprocessing
            }
            .prepare(page)?,
        ),
        GaborInput::Gray => None,
    };
    let blocks = decompose(&gabor_raster, cfg.level, page_id)?;
    let ink_blocks = match &ink_raster {
        Some(r) => Some(decompose(r, cfg.level, page_id)?),
        None => None,
    };

    let mut out = Vec::with_capacity(blocks.blocks.len());
    for (i, block) in blocks.blocks.iter().enumerate() {
        let ink: &Block = ink_blocks.as_ref().map_or(block, |d| &d.blocks[i]);
        let foreground = foreground_ratio(ink, FOREGROUND_THRESHOLD);
        if cfg.min_foreground > 0.0 && foreground < cfg.min_foreground {
            continue;
        }
        let plan = plans.get(block.pixels.width(), block.pixels.height());
        out.push(BlockFeatures {
            row: block.row,
            col: block.col,
            foreground,
            features: extract_with_plan(&block.pixels, plan),
        });
    }
    Ok(out)
}

/// An in-memory page with its class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPage {
    pub page_id: String,
    pub label: String,
    pub image: GrayImage,
}

/// Runs the whole pipeline over labeled pages. Classes are listed in order
/// of first appearance; samples follow page order, then row-major block order.
pub fn extract_dataset(pages: &[LabeledPage], cfg: &ExtractionConfig, bank: &FilterBank) -> Result<Dataset> {
    cfg.validate()?;
    if pages.is_empty() {
        return Err(Error::InvalidParameter("no pages to extract".into()));
    }
    let mut classes: Vec<String> = Vec::new();
    let mut samples = Vec::new();
    let mut plans = PlanCache::new(bank);
    for page in pages {
        if !classes.contains(&page.label) {
            classes.push(page.label.clone());
        }
        let blocks = extract_page(&page.image, &page.page_id, cfg, &mut plans)
            .map_err(|e| Error::Data(format!("page {}: {e}", page.page_id)))?;
        samples.extend(blocks.into_iter().map(|b| LabeledSample {
            features: b.features,
            label: page.label.to_string(),
            page_id: page.page_id.clone(),
            level: cfg.level,
            row: b.row,
            col: b.col,
        }));
    }
    if samples.is_empty() {
        log::warn!(
            "every block was filtered out (min foreground {}); the dataset is empty",
            cfg.min_foreground
        );
    }
    Ok(Dataset { classes, samples })
}

/// `(scale, orientation, is_energy)` of feature `index`.
pub fn subband_of_feature(index: usize) -> (usize, usize, bool) {
    let band = index / 2;
    (band / ORIENTATIONS + 1, band % ORIENTATIONS, index.is_multiple_of(2))
}

const _: () = assert!(FEATURE_DIM == 2 * SCALES * ORIENTATIONS);

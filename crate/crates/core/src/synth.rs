//! Seeded square-wave grating pages used as a stand-in handwriting corpus.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::features::LabeledPage;
use crate::gabor::{scale_frequency, ORIENTATIONS};
use crate::raster::GrayImage;

/// Page dimensions must be divisible by this so levels up to 4 need no padding.
pub const PAGE_MULTIPLE: usize = 16;
pub const DEFAULT_PAGE_SIZE: usize = 256;
pub const DEFAULT_DUTY: f64 = 0.4;
pub const MAX_NOISE: f64 = 0.5;

/// One texture class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub label: String,
    /// Direction of the wave vector in radians; 0 gives vertical stripes.
    pub orientation: f64,
    /// Radians per pixel.
    pub frequency: f64,
    /// Fraction of each period drawn as ink.
    pub duty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub classes: Vec<ClassSpec>,
    pub width: usize,
    pub height: usize,
    pub pages_per_class: usize,
    pub noise_level: f64,
    pub seed: u64,
}

/// The default class for bank scale `scale` and orientation index `mu`.
pub fn grating_class(scale: usize, mu: usize) -> Result<ClassSpec> {
    if mu >= ORIENTATIONS {
        return Err(invalid(format!(
            "orientation index must be below {ORIENTATIONS}, got {mu}"
        )));
    }
    let degrees = mu * 180 / ORIENTATIONS;
    Ok(ClassSpec {
        label: format!("k{scale}_a{degrees:03}"),
        orientation: mu as f64 * PI / ORIENTATIONS as f64,
        frequency: scale_frequency(scale)?,
        duty: DEFAULT_DUTY,
    })
}

/// The first `n` default classes: six orientations at `k_2`, then at `k_4`.
///
/// `n = 6` aligns each class with one scale-2 sub-band; `n = 11` drops only
/// the last `k_4` orientation.
pub fn default_classes(n: usize) -> Result<Vec<ClassSpec>> {
    if !(1..=2 * ORIENTATIONS).contains(&n) {
        return Err(invalid(format!(
            "between 1 and {} default classes exist, got {n}",
            2 * ORIENTATIONS
        )));
    }
    [2, 4]
        .iter()
        .flat_map(|&scale| (0..ORIENTATIONS).map(move |mu| (scale, mu)))
        .take(n)
        .map(|(scale, mu)| grating_class(scale, mu))
        .collect()
}

impl SynthSpec {
    /// `n` default classes on 256x256 pages.
    pub fn with_default_classes(n: usize, pages_per_class: usize, noise_level: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            classes: default_classes(n)?,
            width: DEFAULT_PAGE_SIZE,
            height: DEFAULT_PAGE_SIZE,
            pages_per_class,
            noise_level,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(invalid("a corpus needs at least one class"));
        }
        if self.width == 0
            || self.height == 0
            || !self.width.is_multiple_of(PAGE_MULTIPLE)
            || !self.height.is_multiple_of(PAGE_MULTIPLE)
        {
            return Err(invalid(format!(
                "page size {}x{} must be a positive multiple of {PAGE_MULTIPLE}",
                self.width, self.height
            )));
        }
        if self.pages_per_class == 0 {
            return Err(invalid("pages_per_class must be at least 1"));
        }
        if !(0.0..=MAX_NOISE).contains(&self.noise_level) {
            return Err(invalid(format!(
                "noise level must be in [0, {MAX_NOISE}], got {}",
                self.noise_level
            )));
        }
        for (i, c) in self.classes.iter().enumerate() {
            if c.label.is_empty() || c.label.contains(['/', '\\']) {
                return Err(invalid(format!(
                    "class label {:?} is not a valid directory name",
                    c.label
                )));
            }
            if !(c.duty > 0.0 && c.duty < 1.0) {
                return Err(invalid(format!(
                    "class {}: duty must be in (0,1), got {}",
                    c.label, c.duty
                )));
            }
            if !(c.frequency.is_finite() && c.frequency > 0.0) || !c.orientation.is_finite() {
                return Err(invalid(format!(
                    "class {}: orientation and frequency must be finite",
                    c.label
                )));
            }
            for other in &self.classes[..i] {
                if other.label == c.label {
                    return Err(invalid(format!("duplicate class label {}", c.label)));
                }
                if other.orientation == c.orientation && other.frequency == c.frequency {
                    return Err(invalid(format!(
                        "classes {} and {} share a grating",
                        other.label, c.label
                    )));
                }
            }
        }
        Ok(())
    }

    /// The RNG for page `page` of class `class`.
    pub fn page_rng(&self, class: usize, page: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((class as u64) << 32) | page as u64);
        rng
    }
}

/// Noiseless grating with ink 0 on background 1, `phase` in radians.
pub fn grating(class: &ClassSpec, width: usize, height: usize, phase: f64) -> GrayImage {
    let (k1, k2) = (
        class.frequency * libm::sin(class.orientation),
        class.frequency * libm::cos(class.orientation),
    );
    GrayImage::from_fn(width, height, |row, col| {
        let theta = k1 * row as f64 + k2 * col as f64 + phase;
        let t = theta / (2.0 * PI);
        if t - libm::floor(t) < class.duty {
            0.0
        } else {
            1.0
        }
    })
}

/// A grating with a random phase plus Gaussian noise, clamped and rounded to
/// 8-bit levels so the page survives an 8-bit round trip unchanged.
pub fn gen_page<R: Rng>(class: &ClassSpec, width: usize, height: usize, noise_level: f64, rng: &mut R) -> GrayImage {
    let phase = rng.random_range(0.0..2.0 * PI);
    let clean = grating(class, width, height, phase);
    if noise_level == 0.0 {
        return clean;
    }
    let normal = Normal::new(0.0, noise_level).expect("noise level validated");
    let mut data = clean.into_data();
    for v in &mut data {
        let noisy = (*v + normal.sample(rng)).clamp(0.0, 1.0);
        *v = libm::round(noisy * 255.0) / 255.0;
    }
    GrayImage::new(width, height, data).expect("clamped values")
}

/// Every page of the corpus, class by class; ids are `{label}_{index}`.
pub fn gen_corpus(spec: &SynthSpec) -> Result<Vec<LabeledPage>> {
    spec.validate()?;
    let mut pages = Vec::with_capacity(spec.classes.len() * spec.pages_per_class);
    for (c, class) in spec.classes.iter().enumerate() {
        for i in 0..spec.pages_per_class {
            let mut rng = spec.page_rng(c, i);
            pages.push(LabeledPage {
                page_id: format!("{}_{i}", class.label),
                label: class.label.clone(),
                image: gen_page(class, spec.width, spec.height, spec.noise_level, &mut rng),
            });
        }
    }
    Ok(pages)
}

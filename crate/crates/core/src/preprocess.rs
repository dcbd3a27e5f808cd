//! Otsu binarization and Gaussian denoising.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::raster::{gray_level, GrayImage};

/// Which side of the threshold is ink (label 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    /// Dark ink when the page mean exceeds 0.5, light ink otherwise.
    #[default]
    Auto,
    /// Ink is dark: gray level `<= t` is labeled 1.
    DarkInk,
    /// Ink is light: gray level `> t` is labeled 1.
    LightInk,
}

impl Polarity {
    pub fn resolve(self, img: &GrayImage) -> Polarity {
        match self {
            Polarity::Auto if img.mean() > 0.5 => Polarity::DarkInk,
            Polarity::Auto => Polarity::LightInk,
            fixed => fixed,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Polarity::Auto => "auto",
            Polarity::DarkInk => "dark-ink",
            Polarity::LightInk => "light-ink",
        }
    }
}

impl core::str::FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Polarity::Auto, Polarity::DarkInk, Polarity::LightInk]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| invalid(format!("polarity must be auto, dark-ink or light-ink, got `{s}`")))
    }
}

/// Which raster the Gabor bank filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaborInput {
    /// Otsu-binarized page (ink = 1) after Gaussian smoothing.
    #[default]
    SmoothedBinary,
    /// The grayscale page as loaded.
    Gray,
}

impl GaborInput {
    pub fn name(self) -> &'static str {
        match self {
            GaborInput::SmoothedBinary => "smoothed-binary",
            GaborInput::Gray => "gray",
        }
    }
}

impl core::str::FromStr for GaborInput {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [GaborInput::SmoothedBinary, GaborInput::Gray]
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| invalid(format!("gabor input must be smoothed-binary or gray, got `{s}`")))
    }
}

/// A two-tone image: 1 is object (ink), 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl BinaryImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.data
    }

    pub fn object_count(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    /// The labels as intensities 0.0 / 1.0.
    pub fn to_gray(&self) -> GrayImage {
        let data = self.data.iter().map(|&v| f64::from(v)).collect();
        GrayImage::new(self.width, self.height, data).expect("labels are valid intensities")
    }
}

pub fn histogram(img: &GrayImage) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &v in img.data() {
        hist[gray_level(v) as usize] += 1;
    }
    hist
}

/// Otsu's global threshold over the 256-bin histogram of `round(255 * v)`.
///
/// Returns the smallest `t` maximizing the between-class variance, where
/// bins `<= t` form class 0. Comparisons are exact (rational arithmetic on
/// the integer histogram), so tied thresholds are resolved deterministically.
pub fn otsu_threshold(img: &GrayImage) -> Result<u8> {
    otsu_from_histogram(&histogram(img))
}

pub fn otsu_from_histogram(hist: &[u64; 256]) -> Result<u8> {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return Err(invalid("histogram is empty"));
    }
    assert!(total < 1 << 28, "histogram too large for exact Otsu comparison");
    let occupied: Vec<usize> = (0..256).filter(|&i| hist[i] > 0).collect();
    if occupied.len() == 1 {
        return Err(Error::DegenerateHistogram {
            level: occupied[0] as u8,
        });
    }

    let n = i128::from(total);
    let sum: i128 = hist.iter().enumerate().map(|(i, &c)| i as i128 * i128::from(c)).sum();

    // sigma_B^2(t) * N^2 = (S0*N - S*n0)^2 / (n0 * n1)
    let mut best: Option<(u8, u128, u128)> = None;
    let (mut n0, mut s0) = (0i128, 0i128);
    for (t, &count) in hist.iter().enumerate() {
        n0 += i128::from(count);
        s0 += t as i128 * i128::from(count);
        let n1 = n - n0;
        let (num, den) = if n0 == 0 || n1 == 0 {
            (0u128, 1u128)
        } else {
            let d = (s0 * n - sum * n0).unsigned_abs();
            (d * d, (n0 * n1) as u128)
        };
        let better = match best {
            None => true,
            Some((_, bn, bd)) => cmp_ratio(num, den, bn, bd) == Ordering::Greater,
        };
        if better {
            best = Some((t as u8, num, den));
        }
    }
    Ok(best.expect("256 candidates").0)
}

/// Exact comparison of `a/b` with `c/d` for positive denominators.
fn cmp_ratio(mut a: u128, mut b: u128, mut c: u128, mut d: u128) -> Ordering {
    let mut flipped = false;
    loop {
        let (qa, qc) = (a / b, c / d);
        if qa != qc {
            let ord = qa.cmp(&qc);
            return if flipped { ord.reverse() } else { ord };
        }
        let (ra, rc) = (a % b, c % d);
        match (ra == 0, rc == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => return if flipped { Ordering::Greater } else { Ordering::Less },
            (false, true) => return if flipped { Ordering::Less } else { Ordering::Greater },
            // ra/b vs rc/d  <=>  b/ra vs d/rc, with the order reversed
            (false, false) => {
                (a, b, c, d) = (b, ra, d, rc);
                flipped = !flipped;
            }
        }
    }
}

pub fn binarize(img: &GrayImage, threshold: u8, polarity: Polarity) -> BinaryImage {
    let dark_ink = polarity.resolve(img) == Polarity::DarkInk;
    let data = img
        .data()
        .iter()
        .map(|&v| {
            let above = gray_level(v) > threshold;
            u8::from(above != dark_ink)
        })
        .collect();
    BinaryImage {
        width: img.width(),
        height: img.height(),
        data,
    }
}

/// Normalized 1-D Gaussian taps for offsets `-radius..=radius`.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(invalid(format!("gaussian sigma must be positive, got {sigma}")));
    }
    if radius == 0 {
        return Err(invalid("gaussian radius must be at least 1"));
    }
    let r = radius as isize;
    let mut taps: Vec<f64> = (-r..=r)
        .map(|i| libm::exp(-((i * i) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let z: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= z);
    Ok(taps)
}

/// Separable Gaussian blur with edge replication.
pub fn gaussian_smooth(img: &GrayImage, sigma: f64, radius: usize) -> Result<GrayImage> {
    let taps = gaussian_kernel(sigma, radius)?;
    let (w, h) = (img.width(), img.height());
    let r = radius as isize;
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;

    let mut horiz = Vec::with_capacity(w * h);
    for row in 0..h {
        let line = img.row(row);
        for col in 0..w {
            let mut acc = 0.0;
            for (k, tap) in taps.iter().enumerate() {
                acc += tap * line[clamp(col as isize + k as isize - r, w)];
            }
            horiz.push(acc);
        }
    }
    let mut out = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            let mut acc = 0.0;
            for (k, tap) in taps.iter().enumerate() {
                acc += tap * horiz[clamp(row as isize + k as isize - r, h) * w + col];
            }
            out.push(acc.clamp(0.0, 1.0));
        }
    }
    GrayImage::new(w, h, out)
}

/// Page preprocessing applied before decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub polarity: Polarity,
    pub smooth_sigma: f64,
    pub smooth_radius: usize,
    pub gabor_input: GaborInput,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Self {
            polarity: Polarity::Auto,
            smooth_sigma: 1.0,
            smooth_radius: 3,
            gabor_input: GaborInput::SmoothedBinary,
        }
    }
}

impl Preprocessing {
    pub fn validate(&self) -> Result<()> {
        gaussian_kernel(self.smooth_sigma, self.smooth_radius).map(|_| ())
    }

    /// Produces the raster the filter bank sees.
    ///
    /// In smoothed-binary mode the page is Otsu-binarized (ink = 1) and
    /// smoothed. A constant page has no threshold; it is treated as pure
    /// background and yields an all-zero raster.
    pub fn prepare(&self, page: &GrayImage) -> Result<GrayImage> {
        match self.gabor_input {
            GaborInput::Gray => Ok(page.clone()),
            GaborInput::SmoothedBinary => {
                let binary = match otsu_threshold(page) {
                    Ok(t) => binarize(page, t, self.polarity).to_gray(),
                    Err(Error::DegenerateHistogram { .. }) => {
                        self.validate()?;
                        return Ok(GrayImage::filled(page.width(), page.height(), 0.0));
                    }
                    Err(e) => return Err(e),
                };
                gaussian_smooth(&binary, self.smooth_sigma, self.smooth_radius)
            }
        }
    }
}

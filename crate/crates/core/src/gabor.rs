//! Gabor wavelet bank and same-size complex convolution.
//!
//! Every kernel is a sample of one mother wavelet
//!
//! ```text
//! psi(x) = (k^2 / s^2) * exp(-k^2 |x|^2 / (2 s^2)) * (exp(i k.x) - exp(-s^2 / 2))
//! ```
//!
//! with wave vector `k = (k_v sin phi_u, k_v cos phi_u)`, scale frequency
//! `k_v = 2^(-(v+1)/2) * pi` and orientation `phi_u = u * step`. The first
//! coordinate `x1` runs down the rows and `x2` along the columns, so the
//! `u = 0` kernel oscillates along the columns (it responds to vertical
//! strokes).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fft::Fft;
use crate::raster::GrayImage;

pub const SCALES: usize = 5;
pub const ORIENTATIONS: usize = 6;
pub const SUBBANDS: usize = SCALES * ORIENTATIONS;

pub const DEFAULT_KERNEL_SIZE: usize = 16;
pub const DEFAULT_SIGMA: f64 = 2.0 * PI;

/// Angular spacing between consecutive orientations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OrientationStep {
    /// 30 degrees: six orientations evenly covering `[0, pi)`.
    #[default]
    #[serde(rename = "pi/6")]
    SixthPi,
    /// 22.5 degrees.
    #[serde(rename = "pi/8")]
    EighthPi,
}

impl OrientationStep {
    pub fn radians(self) -> f64 {
        match self {
            OrientationStep::SixthPi => PI / 6.0,
            OrientationStep::EighthPi => PI / 8.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OrientationStep::SixthPi => "pi/6",
            OrientationStep::EighthPi => "pi/8",
        }
    }
}

impl core::str::FromStr for OrientationStep {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pi/6" => Ok(OrientationStep::SixthPi),
            "pi/8" => Ok(OrientationStep::EighthPi),
            _ => Err(invalid(format!("orientation step must be pi/6 or pi/8, got `{s}`"))),
        }
    }
}

/// Scale frequency `k_v` in radians per pixel.
pub fn scale_frequency(scale: usize) -> Result<f64> {
    if !(1..=SCALES).contains(&scale) {
        return Err(invalid(format!("scale index must be in 1..={SCALES}, got {scale}")));
    }
    Ok(libm::pow(2.0, -((scale + 1) as f64) / 2.0) * PI)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveVector {
    /// `k_v`, radians per pixel.
    pub frequency: f64,
    /// `phi_u`, radians.
    pub orientation: f64,
    /// `(k sin phi, k cos phi)` along `(row, column)`.
    pub components: [f64; 2],
}

pub fn wave_vector(scale: usize, orientation: usize, step: OrientationStep) -> Result<WaveVector> {
    let frequency = scale_frequency(scale)?;
    if orientation >= ORIENTATIONS {
        return Err(invalid(format!(
            "orientation index must be in 0..{ORIENTATIONS}, got {orientation}"
        )));
    }
    let phi = orientation as f64 * step.radians();
    Ok(WaveVector {
        frequency,
        orientation: phi,
        components: [frequency * libm::sin(phi), frequency * libm::cos(phi)],
    })
}

/// The continuous mother wavelet for wave vector `k` at `(x1, x2)`.
pub fn mother_wavelet(k: [f64; 2], sigma: f64, x1: f64, x2: f64) -> Complex64 {
    let k2 = k[0] * k[0] + k[1] * k[1];
    let s2 = sigma * sigma;
    let envelope = k2 / s2 * libm::exp(-k2 * (x1 * x1 + x2 * x2) / (2.0 * s2));
    let phase = k[0] * x1 + k[1] * x2;
    let carrier = Complex64::new(libm::cos(phase) - libm::exp(-s2 / 2.0), libm::sin(phase));
    carrier * envelope
}

/// A sampled Gabor kernel, `size x size`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborKernel {
    scale: usize,
    orientation: usize,
    size: usize,
    sigma: f64,
    wave: WaveVector,
    values: Vec<Complex64>,
}

/// Sample offset of grid index `i`; the grid is symmetric about zero, so
/// even sizes sample at half-integer offsets.
pub fn grid_offset(i: usize, size: usize) -> f64 {
    i as f64 - (size as f64 - 1.0) / 2.0
}

pub fn make_kernel(
    scale: usize,
    orientation: usize,
    size: usize,
    sigma: f64,
    step: OrientationStep,
) -> Result<GaborKernel> {
    if size < 4 {
        return Err(invalid(format!("kernel size must be at least 4, got {size}")));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(invalid(format!("gabor sigma must be positive, got {sigma}")));
    }
    let wave = wave_vector(scale, orientation, step)?;
    let mut values = Vec::with_capacity(size * size);
    for i in 0..size {
        for j in 0..size {
            values.push(mother_wavelet(
                wave.components,
                sigma,
                grid_offset(i, size),
                grid_offset(j, size),
            ));
        }
    }
    Ok(GaborKernel {
        scale,
        orientation,
        size,
        sigma,
        wave,
        values,
    })
}

impl GaborKernel {
    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn orientation(&self) -> usize {
        self.orientation
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn wave(&self) -> WaveVector {
        self.wave
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.size + col]
    }

    /// The untruncated wavelet this kernel samples.
    pub fn eval(&self, x1: f64, x2: f64) -> Complex64 {
        mother_wavelet(self.wave.components, self.sigma, x1, x2)
    }

    /// `|sum psi| / sum |psi|`: how far truncation leaves the kernel from zero DC.
    pub fn dc_ratio(&self) -> f64 {
        let sum: Complex64 = self.values.iter().sum();
        let abs: f64 = self.values.iter().map(|v| v.norm()).sum();
        sum.norm() / abs
    }

    /// Index of the kernel tap aligned with the output pixel in "same" mode.
    pub fn anchor(&self) -> usize {
        (self.size - 1) / 2
    }
}

/// Five scales by six orientations, ordered so kernel `6 (v - 1) + u` is `(v, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    kernels: Vec<GaborKernel>,
    size: usize,
    sigma: f64,
    step: OrientationStep,
}

pub fn bank_index(scale: usize, orientation: usize) -> usize {
    ORIENTATIONS * (scale - 1) + orientation
}

pub fn make_filter_bank(size: usize, sigma: f64, step: OrientationStep) -> Result<FilterBank> {
    let mut kernels = Vec::with_capacity(SUBBANDS);
    for scale in 1..=SCALES {
        for orientation in 0..ORIENTATIONS {
            kernels.push(make_kernel(scale, orientation, size, sigma, step)?);
        }
    }
    Ok(FilterBank {
        kernels,
        size,
        sigma,
        step,
    })
}

impl Default for FilterBank {
    fn default() -> Self {
        make_filter_bank(DEFAULT_KERNEL_SIZE, DEFAULT_SIGMA, OrientationStep::default())
            .expect("default bank parameters are valid")
    }
}

impl FilterBank {
    pub fn kernels(&self) -> &[GaborKernel] {
        &self.kernels
    }

    pub fn kernel(&self, scale: usize, orientation: usize) -> &GaborKernel {
        &self.kernels[bank_index(scale, orientation)]
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn step(&self) -> OrientationStep {
        self.step
    }

    /// Precomputes the kernel spectra for blocks of one size.
    pub fn plan(&self, width: usize, height: usize) -> BankPlan<'_> {
        BankPlan::new(self, width, height)
    }
}

/// Complex response of one block to one kernel, same size as the block.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandResponse {
    pub scale: usize,
    pub orientation: usize,
    pub width: usize,
    pub height: usize,
    pub values: Vec<Complex64>,
}

impl SubbandResponse {
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.width + col]
    }

    pub fn mean_magnitude(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() / self.values.len() as f64
    }
}

/// Same-size convolution by the nested-loop definition, zero outside the block.
///
/// `J(r, c) = sum_{i,j} I(r + a - i, c + a - j) * psi[i][j]` with `a` the kernel anchor.
pub fn convolve_direct(block: &GrayImage, kernel: &GaborKernel) -> SubbandResponse {
    let (w, h) = (block.width() as isize, block.height() as isize);
    let (size, anchor) = (kernel.size() as isize, kernel.anchor() as isize);
    let mut values = Vec::with_capacity((w * h) as usize);
    for r in 0..h {
        for c in 0..w {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..size {
                let y = r + anchor - i;
                if y < 0 || y >= h {
                    continue;
                }
                let row = block.row(y as usize);
                for j in 0..size {
                    let x = c + anchor - j;
                    if x < 0 || x >= w {
                        continue;
                    }
                    acc += kernel.get(i as usize, j as usize) * row[x as usize];
                }
            }
            values.push(acc);
        }
    }
    SubbandResponse {
        scale: kernel.scale(),
        orientation: kernel.orientation(),
        width: block.width(),
        height: block.height(),
        values,
    }
}

/// Same-size convolution through the transform domain.
pub fn convolve_fft(block: &GrayImage, kernel: &GaborKernel) -> SubbandResponse {
    let plan = ConvolutionGeometry::new(block.width(), block.height(), kernel.size());
    let spectrum = plan.kernel_spectrum(kernel);
    let image = plan.image_spectrum(block);
    plan.response(&image, &spectrum, kernel)
}

/// Same-size convolution, picking whichever path is cheaper for the block size.
pub fn convolve(block: &GrayImage, kernel: &GaborKernel) -> SubbandResponse {
    let geometry = ConvolutionGeometry::new(block.width(), block.height(), kernel.size());
    if geometry.prefers_fft() {
        convolve_fft(block, kernel)
    } else {
        convolve_direct(block, kernel)
    }
}

/// Filters a block through all 30 kernels, in bank order.
pub fn filter_block(block: &GrayImage, bank: &FilterBank) -> Vec<SubbandResponse> {
    bank.plan(block.width(), block.height()).filter(block)
}

/// Padded transform sizes for linear convolution of one block size.
#[derive(Debug, Clone)]
struct ConvolutionGeometry {
    width: usize,
    height: usize,
    kernel_size: usize,
    anchor: usize,
    row_fft: Fft,
    col_fft: Fft,
}

impl ConvolutionGeometry {
    fn new(width: usize, height: usize, kernel_size: usize) -> Self {
        let pw = (width + kernel_size - 1).next_power_of_two();
        let ph = (height + kernel_size - 1).next_power_of_two();
        Self {
            width,
            height,
            kernel_size,
            anchor: (kernel_size - 1) / 2,
            row_fft: Fft::new(pw),
            col_fft: Fft::new(ph),
        }
    }

    fn padded(&self) -> (usize, usize) {
        (self.row_fft.len(), self.col_fft.len())
    }

    fn prefers_fft(&self) -> bool {
        let (pw, ph) = self.padded();
        let direct = self.width * self.height * self.kernel_size * self.kernel_size;
        let area = pw * ph;
        let transform = 2 * area * (area.trailing_zeros() as usize).max(1);
        direct > transform
    }

    /// Forward 2-D transform of a buffer whose nonzero rows are `0..rows`.
    fn forward(&self, buf: &mut [Complex64], rows: usize) {
        let (pw, ph) = self.padded();
        for line in buf.chunks_exact_mut(pw).take(rows) {
            self.row_fft.forward(line);
        }
        let mut column = vec![Complex64::new(0.0, 0.0); ph];
        for c in 0..pw {
            for r in 0..ph {
                column[r] = buf[r * pw + c];
            }
            self.col_fft.forward(&mut column);
            for r in 0..ph {
                buf[r * pw + c] = column[r];
            }
        }
    }

    fn kernel_spectrum(&self, kernel: &GaborKernel) -> Vec<Complex64> {
        let (pw, ph) = self.padded();
        let k = kernel.size();
        let mut buf = vec![Complex64::new(0.0, 0.0); pw * ph];
        for i in 0..k {
            buf[i * pw..i * pw + k].copy_from_slice(&kernel.values()[i * k..(i + 1) * k]);
        }
        self.forward(&mut buf, k);
        buf
    }

    fn image_spectrum(&self, block: &GrayImage) -> Vec<Complex64> {
        assert_eq!((block.width(), block.height()), (self.width, self.height));
        let (pw, ph) = self.padded();
        let mut buf = vec![Complex64::new(0.0, 0.0); pw * ph];
        for r in 0..self.height {
            for (dst, &v) in buf[r * pw..r * pw + self.width].iter_mut().zip(block.row(r)) {
                *dst = Complex64::new(v, 0.0);
            }
        }
        self.forward(&mut buf, self.height);
        buf
    }

    /// Multiplies spectra, inverts every row, then only the columns that land in the output window.
    fn response(&self, image: &[Complex64], kernel_spectrum: &[Complex64], kernel: &GaborKernel) -> SubbandResponse {
        let (pw, ph) = self.padded();
        let mut buf: Vec<Complex64> = image.iter().zip(kernel_spectrum).map(|(a, b)| a * b).collect();
        for line in buf.chunks_exact_mut(pw) {
            self.row_fft.inverse(line);
        }
        let mut values = vec![Complex64::new(0.0, 0.0); self.width * self.height];
        let mut column = vec![Complex64::new(0.0, 0.0); ph];
        for c in 0..self.width {
            for r in 0..ph {
                column[r] = buf[r * pw + c + self.anchor];
            }
            self.col_fft.inverse(&mut column);
            for r in 0..self.height {
                values[r * self.width + c] = column[r + self.anchor];
            }
        }
        SubbandResponse {
            scale: kernel.scale(),
            orientation: kernel.orientation(),
            width: self.width,
            height: self.height,
            values,
        }
    }
}

/// A filter bank prepared for one block size. Immutable, so it can be
/// shared across threads.
#[derive(Debug, Clone)]
pub struct BankPlan<'a> {
    bank: &'a FilterBank,
    geometry: ConvolutionGeometry,
    use_fft: bool,
    spectra: Vec<Vec<Complex64>>,
}

impl<'a> BankPlan<'a> {
    fn new(bank: &'a FilterBank, width: usize, height: usize) -> Self {
        let geometry = ConvolutionGeometry::new(width, height, bank.size());
        let use_fft = geometry.prefers_fft();
        let spectra = if use_fft {
            bank.kernels().iter().map(|k| geometry.kernel_spectrum(k)).collect()
        } else {
            Vec::new()
        };
        Self {
            bank,
            geometry,
            use_fft,
            spectra,
        }
    }

    pub fn block_size(&self) -> (usize, usize) {
        (self.geometry.width, self.geometry.height)
    }

    pub fn uses_transform(&self) -> bool {
        self.use_fft
    }

    /// Responses to all 30 kernels in bank order. Panics if the block size differs from the plan.
    pub fn filter(&self, block: &GrayImage) -> Vec<SubbandResponse> {
        assert_eq!(
            (block.width(), block.height()),
            self.block_size(),
            "block size differs from the plan"
        );
        if self.use_fft {
            let image = self.geometry.image_spectrum(block);
            self.bank
                .kernels()
                .iter()
                .zip(&self.spectra)
                .map(|(k, s)| self.geometry.response(&image, s, k))
                .collect()
        } else {
            self.bank.kernels().iter().map(|k| convolve_direct(block, k)).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grating(n: usize, wave: [f64; 2]) -> GrayImage {
        GrayImage::from_fn(n, n, |r, c| {
            0.5 + 0.5 * libm::cos(wave[0] * r as f64 + wave[1] * c as f64)
        })
    }

    #[test]
    fn orientation_step_names() {
        for step in [OrientationStep::SixthPi, OrientationStep::EighthPi] {
            assert_eq!(step.name().parse::<OrientationStep>().unwrap(), step);
        }
        assert!("pi/4".parse::<OrientationStep>().is_err());
    }

    #[test]
    fn wave_vector_values() {
        let w = wave_vector(1, 0, OrientationStep::SixthPi).unwrap();
        assert!((w.frequency - PI / 2.0).abs() < 1e-15);
        assert_eq!(w.orientation, 0.0);
        assert_eq!(w.components, [0.0, w.frequency]);
        let w = wave_vector(3, 3, OrientationStep::SixthPi).unwrap();
        assert!((w.orientation - PI / 2.0).abs() < 1e-15);
        assert!((w.orientation.to_degrees() - 90.0).abs() < 1e-12);
        let w = wave_vector(2, 2, OrientationStep::EighthPi).unwrap();
        assert!((w.orientation - PI / 4.0).abs() < 1e-15);
        assert!(wave_vector(0, 0, OrientationStep::SixthPi).is_err());
        assert!(wave_vector(6, 0, OrientationStep::SixthPi).is_err());
        assert!(wave_vector(1, 6, OrientationStep::SixthPi).is_err());
    }

    #[test]
    fn kernel_parameters_checked() {
        assert!(make_kernel(1, 0, 3, DEFAULT_SIGMA, OrientationStep::SixthPi).is_err());
        assert!(make_kernel(1, 0, 16, 0.0, OrientationStep::SixthPi).is_err());
        assert!(make_kernel(1, 0, 16, -1.0, OrientationStep::SixthPi).is_err());
    }

    #[test]
    fn center_value_is_real() {
        for scale in 1..=SCALES {
            let k = make_kernel(scale, 2, 17, DEFAULT_SIGMA, OrientationStep::SixthPi).unwrap();
            let f = k.wave().frequency;
            let s2 = DEFAULT_SIGMA * DEFAULT_SIGMA;
            let expected = f * f / s2 * (1.0 - libm::exp(-s2 / 2.0));
            let center = k.get(8, 8);
            assert!((center.re - expected).abs() < 1e-12);
            assert_eq!(center.im, 0.0);
            assert_eq!(k.eval(0.0, 0.0), center);
        }
    }

    #[test]
    fn bank_order() {
        let bank = FilterBank::default();
        assert_eq!(bank.kernels().len(), 30);
        assert_eq!((bank.kernels()[0].scale(), bank.kernels()[0].orientation()), (1, 0));
        assert_eq!((bank.kernels()[29].scale(), bank.kernels()[29].orientation()), (5, 5));
        for (i, k) in bank.kernels().iter().enumerate() {
            assert_eq!(bank_index(k.scale(), k.orientation()), i);
        }
    }

    #[test]
    fn quarter_turn_transposes() {
        for size in [16, 17] {
            for scale in 1..=SCALES {
                let k0 = make_kernel(scale, 0, size, DEFAULT_SIGMA, OrientationStep::SixthPi).unwrap();
                let k3 = make_kernel(scale, 3, size, DEFAULT_SIGMA, OrientationStep::SixthPi).unwrap();
                for i in 0..size {
                    for j in 0..size {
                        assert!((k3.get(i, j) - k0.get(j, i)).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn scales_are_dilations() {
        let bank = FilterBank::default();
        for orientation in 0..ORIENTATIONS {
            let k1 = bank.kernel(1, orientation);
            let k2 = bank.kernel(2, orientation);
            let (f1, f2) = (k1.wave().frequency, k2.wave().frequency);
            let amplitude = (f2 * f2) / (f1 * f1);
            for i in 0..16 {
                for j in 0..16 {
                    let (x1, x2) = (grid_offset(i, 16), grid_offset(j, 16));
                    let dilated = k2.eval(x1 * f1 / f2, x2 * f1 / f2);
                    assert!((dilated - k1.get(i, j) * amplitude).norm() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn zero_block_gives_zero() {
        let block = GrayImage::filled(12, 9, 0.0);
        let bank = FilterBank::default();
        let out = filter_block(&block, &bank);
        assert_eq!(out.len(), 30);
        for r in &out {
            assert_eq!((r.width, r.height), (12, 9));
            assert!(r.values.iter().all(|v| v.norm() == 0.0));
        }
    }

    #[test]
    fn constant_block_interior_bounded_by_dc_residual() {
        let c = 0.8;
        let block = GrayImage::filled(48, 48, c);
        for k in FilterBank::default().kernels() {
            let residual: Complex64 = k.values().iter().sum();
            let out = convolve(&block, k);
            // the full kernel support lies inside the block here
            for r in 16..32 {
                for col in 16..32 {
                    assert!(out.get(r, col).norm() <= c * residual.norm() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn matched_grating_wins_at_scale_two() {
        let bank = FilterBank::default();
        for matched in 0..ORIENTATIONS {
            let wave = bank.kernel(2, matched).wave().components;
            let responses = filter_block(&grating(64, wave), &bank);
            let means: Vec<f64> = (0..ORIENTATIONS)
                .map(|o| responses[bank_index(2, o)].mean_magnitude())
                .collect();
            for (o, m) in means.iter().enumerate() {
                if o != matched {
                    assert!(means[matched] > *m, "orientation {matched}: {means:?}");
                }
            }
        }
    }

    #[test]
    fn plan_switches_paths_by_size() {
        let bank = FilterBank::default();
        assert!(!bank.plan(3, 3).uses_transform());
        assert!(bank.plan(64, 64).uses_transform());
    }

    proptest! {
        #[test]
        fn transform_matches_direct(w in 1usize..40, h in 1usize..40, seed in proptest::collection::vec(0.0f64..=1.0, 1600), k in 0usize..30) {
            let block = GrayImage::new(w, h, seed[..w * h].to_vec()).unwrap();
            let bank = FilterBank::default();
            let a = convolve_direct(&block, &bank.kernels()[k]);
            let b = convolve_fft(&block, &bank.kernels()[k]);
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).norm() < 1e-9);
            }
        }

        #[test]
        fn convolution_is_linear(
            s1 in proptest::collection::vec(0.0f64..=1.0, 100),
            s2 in proptest::collection::vec(0.0f64..=1.0, 100),
            alpha in 0.0f64..0.5,
            beta in 0.0f64..0.5,
            k in 0usize..30,
        ) {
            let i1 = GrayImage::new(10, 10, s1.clone()).unwrap();
            let i2 = GrayImage::new(10, 10, s2.clone()).unwrap();
            let mix = GrayImage::new(10, 10, s1.iter().zip(&s2).map(|(a, b)| alpha * a + beta * b).collect()).unwrap();
            let bank = FilterBank::default();
            let kernel = &bank.kernels()[k];
            let (j1, j2, jm) = (convolve(&i1, kernel), convolve(&i2, kernel), convolve(&mix, kernel));
            for ((a, b), m) in j1.values.iter().zip(&j2.values).zip(&jm.values) {
                prop_assert!((a * alpha + b * beta - m).norm() < 1e-9);
            }
        }
    }
}

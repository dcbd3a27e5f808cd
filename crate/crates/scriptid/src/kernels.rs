//! Kernel dumps: real and imaginary parts as CSV grids and 8-bit PGM images.

use std::fs;
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};
use scriptid_core::gabor::{FilterBank, GaborKernel};

use crate::error::{CliError, Result};
use crate::features_csv::format_float;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Re,
    Im,
}

impl Part {
    pub fn name(self) -> &'static str {
        match self {
            Part::Re => "re",
            Part::Im => "im",
        }
    }

    fn of(self, kernel: &GaborKernel) -> Vec<f64> {
        kernel
            .values()
            .iter()
            .map(|z| match self {
                Part::Re => z.re,
                Part::Im => z.im,
            })
            .collect()
    }
}

/// `kernel_v{scale}_o{orientation}_{re|im}`, without extension.
pub fn kernel_stem(kernel: &GaborKernel, part: Part) -> String {
    format!("kernel_v{}_o{}_{}", kernel.scale(), kernel.orientation(), part.name())
}

/// Row-major grid, one kernel row per line.
pub fn kernel_csv(values: &[f64], size: usize) -> String {
    let mut out = String::new();
    for row in values.chunks_exact(size) {
        let cells: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Linearly maps `[min, max]` onto `0..=255`. A constant grid maps to 0.
pub fn normalize_to_gray8(values: &[f64]) -> Vec<u8> {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if hi <= lo {
        return vec![0; values.len()];
    }
    values
        .iter()
        .map(|&v| ((v - lo) / (hi - lo) * 255.0).round() as u8)
        .collect()
}

fn write_pgm(path: &Path, pixels: &[u8], size: usize) -> Result<()> {
    let mut buf = Vec::new();
    PnmEncoder::new(&mut buf)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(pixels, size as u32, size as u32, ExtendedColorType::L8)
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    fs::write(path, buf).map_err(|e| CliError::io(path, e))
}

/// Writes every kernel of the bank into `dir`; returns the files written.
pub fn dump_kernels(dir: &Path, bank: &FilterBank) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    for kernel in bank.kernels() {
        for part in [Part::Re, Part::Im] {
            let values = part.of(kernel);
            let stem = kernel_stem(kernel, part);
            let csv_path = dir.join(format!("{stem}.csv"));
            fs::write(&csv_path, kernel_csv(&values, kernel.size())).map_err(|e| CliError::io(&csv_path, e))?;
            let pgm_path = dir.join(format!("{stem}.pgm"));
            write_pgm(&pgm_path, &normalize_to_gray8(&values), kernel.size())?;
            written.push(csv_path);
            written.push(pgm_path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_spans_full_range() {
        assert_eq!(normalize_to_gray8(&[-1.0, 0.0, 1.0]), vec![0, 128, 255]);
        assert_eq!(normalize_to_gray8(&[2.0, 2.0]), vec![0, 0]);
    }

    #[test]
    fn csv_grid_shape() {
        let text = kernel_csv(&[1.0, 2.0, 3.0, 4.0], 2);
        assert_eq!(
            text,
            "1.0000000000000000e0,2.0000000000000000e0\n3.0000000000000000e0,4.0000000000000000e0\n"
        );
    }

    #[test]
    fn dump_writes_sixty_csv_and_sixty_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let files = dump_kernels(dir.path(), &FilterBank::default()).unwrap();
        assert_eq!(files.len(), 120);
        let count = |ext: &str| files.iter().filter(|f| f.extension().unwrap() == ext).count();
        assert_eq!((count("csv"), count("pgm")), (60, 60));
        let pgm = fs::read(dir.path().join("kernel_v1_o0_re.pgm")).unwrap();
        assert!(pgm.starts_with(b"P5"));
        let img = image::open(dir.path().join("kernel_v3_o2_im.pgm")).unwrap().to_luma8();
        assert_eq!(img.dimensions(), (16, 16));
    }
}

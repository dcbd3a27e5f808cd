//! Page images and dataset directories.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat, ImageReader};
use log::debug;
use scriptid_core::features::LabeledPage;
use scriptid_core::raster::{to_grayscale, GrayImage, RgbImage};

use crate::error::{CliError, Result};

fn unreadable(path: &Path, reason: impl ToString) -> CliError {
    CliError::UnreadablePage {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

/// Loads an 8-bit grayscale or RGB PNG or BMP page.
pub fn load_image(path: &Path) -> Result<GrayImage> {
    let reader = ImageReader::open(path)
        .map_err(|e| unreadable(path, e))?
        .with_guessed_format()
        .map_err(|e| unreadable(path, e))?;
    match reader.format() {
        Some(ImageFormat::Png | ImageFormat::Bmp) => {}
        Some(other) => return Err(unreadable(path, format!("unsupported format {other:?}"))),
        None => return Err(unreadable(path, "unrecognized image format")),
    }
    let decoded = reader.decode().map_err(|e| unreadable(path, e))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    match decoded {
        DynamicImage::ImageLuma8(buf) => {
            let data = buf.into_raw().into_iter().map(|v| f64::from(v) / 255.0).collect();
            GrayImage::new(w, h, data).map_err(|e| unreadable(path, e))
        }
        DynamicImage::ImageRgb8(buf) => {
            let data = buf.into_raw().chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
            let rgb = RgbImage::new(w, h, data).map_err(|e| unreadable(path, e))?;
            Ok(to_grayscale(&rgb))
        }
        other => Err(unreadable(
            path,
            format!("expected 8-bit gray or RGB pixels, found {:?}", other.color()),
        )),
    }
}

/// Writes an 8-bit grayscale PNG.
pub fn save_png(path: &Path, img: &GrayImage) -> Result<()> {
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.to_gray8())
        .expect("buffer matches dimensions");
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

/// One page file found in a dataset directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageEntry {
    pub label: String,
    pub page_id: String,
    pub path: PathBuf,
}

fn is_page_file(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png") || e.eq_ignore_ascii_case("bmp"))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        out.push(entry.map_err(|e| CliError::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

/// Lists `root/<label>/<page>.(png|bmp)`, labels and pages in byte order.
pub fn scan_dataset(root: &Path) -> Result<Vec<PageEntry>> {
    if !root.is_dir() {
        return Err(CliError::EmptyDataset(format!("{} is not a directory", root.display())));
    }
    let mut pages = Vec::new();
    for class_dir in sorted_entries(root)? {
        if !class_dir.is_dir() {
            continue;
        }
        let Some(label) = class_dir.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        for file in sorted_entries(&class_dir)? {
            if !is_page_file(&file) {
                continue;
            }
            let page_id = file
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| unreadable(&file, "file name is not valid UTF-8"))?;
            pages.push(PageEntry {
                label: label.to_string(),
                page_id: page_id.to_string(),
                path: file.clone(),
            });
        }
    }
    if pages.is_empty() {
        return Err(CliError::EmptyDataset(format!(
            "no <label>/<page>.png or .bmp files under {}",
            root.display()
        )));
    }
    debug!("found {} pages under {}", pages.len(), root.display());
    Ok(pages)
}

pub fn load_dataset(root: &Path) -> Result<Vec<LabeledPage>> {
    scan_dataset(root)?
        .into_iter()
        .map(|e| {
            Ok(LabeledPage {
                image: load_image(&e.path)?,
                page_id: e.page_id,
                label: e.label,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::from_fn(5, 3, |r, c| ((r * 5 + c) * 17) as f64 / 255.0);
        let path = dir.path().join("a.png");
        save_png(&path, &img).unwrap();
        assert_eq!(load_image(&path).unwrap(), img);
    }

    #[test]
    fn rgb_bmp_is_converted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.bmp");
        let buf = image::RgbImage::from_fn(2, 2, |x, _| {
            if x == 0 {
                image::Rgb([0, 0, 0])
            } else {
                image::Rgb([255, 255, 255])
            }
        });
        buf.save(&path).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.data(), &[0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn sixteen_bit_and_garbage_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let wide = dir.path().join("w.png");
        image::ImageBuffer::<image::Luma<u16>, _>::from_pixel(2, 2, image::Luma([1000u16]))
            .save(&wide)
            .unwrap();
        assert!(matches!(load_image(&wide), Err(CliError::UnreadablePage { .. })));
        let junk = dir.path().join("j.png");
        fs::write(&junk, b"not an image").unwrap();
        assert!(matches!(load_image(&junk), Err(CliError::UnreadablePage { .. })));
    }

    #[test]
    fn scan_orders_and_filters() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::filled(2, 2, 1.0);
        for (label, page) in [("b", "p1"), ("a", "p2"), ("a", "p1")] {
            fs::create_dir_all(dir.path().join(label)).unwrap();
            save_png(&dir.path().join(label).join(format!("{page}.png")), &img).unwrap();
        }
        fs::write(dir.path().join("a").join("notes.txt"), "x").unwrap();
        fs::write(dir.path().join("stray.png"), "x").unwrap();
        let got: Vec<(String, String)> = scan_dataset(dir.path())
            .unwrap()
            .into_iter()
            .map(|e| (e.label, e.page_id))
            .collect();
        assert_eq!(
            got,
            [("a", "p1"), ("a", "p2"), ("b", "p1")].map(|(l, p)| (l.to_string(), p.to_string()))
        );
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(scan_dataset(dir.path()), Err(CliError::EmptyDataset(_))));
    }
}

//! Fixed-level quad-tree decomposition.
//!
//! Level `l` splits a page into a `2^l x 2^l` grid of equal blocks. Pages
//! whose sides are not multiples of `2^l` are first padded on the right and
//! bottom with background (0.0).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::raster::GrayImage;

pub const MAX_LEVEL: u32 = 6;

/// One leaf of a level-`l` decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub level: u32,
    pub row: usize,
    pub col: usize,
    pub pixels: GrayImage,
}

impl Block {
    /// Row-major position within the level: `row * 2^l + col`.
    pub fn index(&self) -> usize {
        self.row * (1 << self.level) + self.col
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageDecomposition {
    pub page_id: String,
    pub level: u32,
    pub blocks: Vec<Block>,
}

impl PageDecomposition {
    pub fn grid_side(&self) -> usize {
        1 << self.level
    }

    /// Stitches the blocks back into the padded page.
    pub fn reassemble(&self) -> GrayImage {
        let side = self.grid_side();
        let bw = self.blocks[0].pixels.width();
        let bh = self.blocks[0].pixels.height();
        let width = bw * side;
        let mut data = alloc::vec![0.0; width * bh * side];
        for block in &self.blocks {
            for r in 0..bh {
                let dst = (block.row * bh + r) * width + block.col * bw;
                data[dst..dst + bw].copy_from_slice(block.pixels.row(r));
            }
        }
        GrayImage::new(width, bh * side, data).expect("blocks hold valid intensities")
    }
}

fn round_up(n: usize, multiple: usize) -> usize {
    n.div_ceil(multiple) * multiple
}

/// Pads right and bottom with 0.0 up to the next multiples of `2^level`.
pub fn pad_to_level(img: &GrayImage, level: u32) -> GrayImage {
    let m = 1usize << level;
    let (w, h) = (round_up(img.width(), m), round_up(img.height(), m));
    if (w, h) == (img.width(), img.height()) {
        return img.clone();
    }
    GrayImage::from_fn(w, h, |r, c| {
        if r < img.height() && c < img.width() {
            img.get(r, c)
        } else {
            0.0
        }
    })
}

pub fn decompose(img: &GrayImage, level: u32, page_id: &str) -> Result<PageDecomposition> {
    if level > MAX_LEVEL {
        return Err(invalid(format!(
            "quad-tree level must be in [0, {MAX_LEVEL}], got {level}"
        )));
    }
    let padded = pad_to_level(img, level);
    let side = 1usize << level;
    let bw = padded.width() / side;
    let bh = padded.height() / side;
    let mut blocks = Vec::with_capacity(side * side);
    for row in 0..side {
        for col in 0..side {
            blocks.push(Block {
                level,
                row,
                col,
                pixels: padded.crop(row * bh, col * bw, bw, bh)?,
            });
        }
    }
    Ok(PageDecomposition {
        page_id: page_id.into(),
        level,
        blocks,
    })
}

/// Fraction of pixels strictly above `threshold`.
pub fn foreground_ratio(block: &Block, threshold: f64) -> f64 {
    let px = block.pixels.data();
    px.iter().filter(|&&v| v > threshold).count() as f64 / px.len() as f64
}

//! Block-level script identification from texture.
//!
//! The pipeline: a page is converted to grayscale, binarized with Otsu's
//! threshold and smoothed, split into `4^l` equal blocks by a fixed-level
//! quad-tree, and each block is filtered through a bank of 30 Gabor
//! wavelets (5 scales x 6 orientations). The energy and entropy of every
//! sub-band form a 60-value feature vector, which an MLP (or a k-NN
//! baseline) classifies.
//!
//! This crate is `no_std` and only needs `alloc`. File formats, image
//! decoding and the command line live in the `scriptid` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod classify;
pub mod error;
pub mod features;
pub mod fft;
pub mod gabor;
pub mod preprocess;
pub mod quadtree;
pub mod raster;
pub mod synth;

pub use error::{Error, Result};

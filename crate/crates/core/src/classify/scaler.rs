use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Per-feature min-max scaling to `[0, 1]`, fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub ranges: Vec<(f64, f64)>,
}

impl MinMaxScaler {
    /// Fits on rows of equal length. Panics on an empty slice.
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let dim = rows[0].as_ref().len();
        let mut ranges = alloc::vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
        for row in rows {
            for (r, &v) in ranges.iter_mut().zip(row.as_ref()) {
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
        Self { ranges }
    }

    /// Identity scaling for `dim` features.
    pub fn identity(dim: usize) -> Self {
        Self {
            ranges: alloc::vec![(0.0, 1.0); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    /// Maps each feature by `(x - min) / (max - min)`; constant features map to 0.
    pub fn transform(&self, row: &[f64], clamp: bool) -> Vec<f64> {
        self.ranges
            .iter()
            .zip(row)
            .map(|(&(lo, hi), &v)| {
                if hi > lo {
                    let s = (v - lo) / (hi - lo);
                    if clamp {
                        s.clamp(0.0, 1.0)
                    } else {
                        s
                    }
                } else {
                    0.0
                }
            })
            .collect()
    }
}

//! Radix-2 complex FFT and a 2-D wrapper.
//!
//! Sizes are powers of two. Convolution pads up to the next power of two
//! anyway, so mixed radices are never needed here.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    /// `exp(-2 pi i k / n)` for `k < n / 2`.
    twiddles: Vec<Complex64>,
    bit_reverse: Vec<usize>,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT length must be a power of two, got {n}");
        let twiddles = (0..n / 2)
            .map(|k| {
                let angle = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(libm::cos(angle), libm::sin(angle))
            })
            .collect();
        let bits = n.trailing_zeros();
        let bit_reverse = (0..n)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (usize::BITS - bits)
                }
            })
            .collect();
        Self {
            n,
            twiddles,
            bit_reverse,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// Inverse transform, including the `1/n` scaling.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let scale = 1.0 / self.n as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        assert_eq!(data.len(), n);
        for i in 0..n {
            let j = self.bit_reverse[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

/// 2-D transform over a row-major `width x height` buffer.
#[derive(Debug, Clone)]
pub struct Fft2d {
    rows: Fft,
    cols: Fft,
}

impl Fft2d {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            rows: Fft::new(width),
            cols: Fft::new(height),
        }
    }

    pub fn width(&self) -> usize {
        self.rows.len()
    }

    pub fn height(&self) -> usize {
        self.cols.len()
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, false);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, true);
    }

    fn apply(&self, data: &mut [Complex64], inverse: bool) {
        let (w, h) = (self.width(), self.height());
        assert_eq!(data.len(), w * h);
        for line in data.chunks_exact_mut(w) {
            if inverse {
                self.rows.inverse(line);
            } else {
                self.rows.forward(line);
            }
        }
        let mut column = alloc::vec![Complex64::new(0.0, 0.0); h];
        for c in 0..w {
            for r in 0..h {
                column[r] = data[r * w + c];
            }
            if inverse {
                self.cols.inverse(&mut column);
            } else {
                self.cols.forward(&mut column);
            }
            for r in 0..h {
                data[r * w + c] = column[r];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let a = -2.0 * PI * (j * k) as f64 / n as f64;
                        v * Complex64::new(a.cos(), a.sin())
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn length_one_is_identity() {
        let f = Fft::new(1);
        let mut x = vec![Complex64::new(3.0, -1.0)];
        f.forward(&mut x);
        assert_eq!(x[0], Complex64::new(3.0, -1.0));
    }

    #[test]
    #[should_panic]
    fn rejects_non_power_of_two() {
        Fft::new(12);
    }

    proptest! {
        #[test]
        fn matches_naive_dft(log_n in 0u32..7, seed in proptest::collection::vec(-1.0f64..1.0, 128)) {
            let n = 1usize << log_n;
            let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(seed[i], seed[127 - i])).collect();
            let mut y = x.clone();
            Fft::new(n).forward(&mut y);
            for (a, b) in y.iter().zip(naive_dft(&x)) {
                prop_assert!((a - b).norm() < 1e-11);
            }
        }

        #[test]
        fn inverse_round_trip(seed in proptest::collection::vec(-1.0f64..1.0, 32)) {
            let f = Fft2d::new(8, 4);
            let x: Vec<Complex64> = seed.iter().map(|&v| Complex64::new(v, 0.5 * v)).collect();
            let mut y = x.clone();
            f.forward(&mut y);
            f.inverse(&mut y);
            for (a, b) in y.iter().zip(&x) {
                prop_assert!((a - b).norm() < 1e-13);
            }
        }
    }
}

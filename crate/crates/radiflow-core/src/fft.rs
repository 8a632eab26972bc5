//! Radix-2 complex FFT in one to three dimensions.
//!
//! Forward transforms carry the `1/N` normalisation so that the output is the
//! table of Fourier coefficients; the inverse is the plain sum.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// Precomputed twiddles for one length.
#[derive(Debug, Clone)]
pub struct Fft1 {
    n: usize,
    twiddle: Vec<Complex64>,
    rev: Vec<usize>,
}

impl Fft1 {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two() && n > 0);
        let twiddle = (0..n / 2)
            .map(|k| {
                let th = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(th.cos(), th.sin())
            })
            .collect();
        let bits = n.trailing_zeros();
        let rev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        Fft1 { n, twiddle, rev }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalised transform; `inverse` flips the sign of the exponent.
    pub fn run(&self, x: &mut [Complex64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(x.len(), n);
        for i in 0..n {
            let j = self.rev[i];
            if j > i {
                x.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let step = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..len / 2 {
                    let mut w = self.twiddle[k * step];
                    if inverse {
                        w = w.conj();
                    }
                    let a = x[start + k];
                    let b = x[start + k + len / 2] * w;
                    x[start + k] = a + b;
                    x[start + k + len / 2] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

/// FFT on a `dim`-dimensional cube of side `n`, row-major with the last axis
/// fastest.
#[derive(Debug, Clone)]
pub struct FftNd {
    dim: usize,
    n: usize,
    line: Fft1,
}

impl FftNd {
    pub fn new(dim: usize, n: usize) -> Self {
        assert!((1..=3).contains(&dim));
        FftNd { dim, n, line: Fft1::new(n) }
    }

    pub fn total(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Physical values to Fourier coefficients (divides by `N^dim`).
    pub fn forward(&self, x: &mut [Complex64]) {
        self.transform(x, false);
        let s = 1.0 / self.total() as f64;
        for v in x.iter_mut() {
            *v *= s;
        }
    }

    /// Fourier coefficients to physical values.
    pub fn inverse(&self, x: &mut [Complex64]) {
        self.transform(x, true);
    }

    fn transform(&self, x: &mut [Complex64], inverse: bool) {
        let n = self.n;
        assert_eq!(x.len(), self.total());
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            for outer in (0..x.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for k in 0..n {
                        buf[k] = x[base + k * stride];
                    }
                    self.line.run(&mut buf, inverse);
                    for k in 0..n {
                        x[base + k * stride] = buf[k];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                (0..n).fold(Complex64::new(0.0, 0.0), |acc, j| {
                    let th = -2.0 * PI * (k * j) as f64 / n as f64;
                    acc + x[j] * Complex64::new(th.cos(), th.sin())
                })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let n = 16;
        let x: Vec<Complex64> =
            (0..n).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i * i) as f64 * 0.01)).collect();
        let mut y = x.clone();
        Fft1::new(n).run(&mut y, false);
        let z = naive_dft(&x);
        for (a, b) in y.iter().zip(&z) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn round_trip_3d() {
        let f = FftNd::new(3, 8);
        let x: Vec<Complex64> =
            (0..f.total()).map(|i| Complex64::new((i as f64).cos(), 0.0)).collect();
        let mut y = x.clone();
        f.forward(&mut y);
        f.inverse(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_mode_2d() {
        // cos(x0) on an 8x8 grid has coefficients 1/2 at k = (+-1, 0)
        let n = 8;
        let f = FftNd::new(2, n);
        let mut x = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                x[i * n + j] = Complex64::new((2.0 * PI * i as f64 / n as f64).cos(), 0.0);
            }
        }
        f.forward(&mut x);
        assert!((x[n] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((x[(n - 1) * n] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!(x[1].norm() < 1e-14);
    }
}

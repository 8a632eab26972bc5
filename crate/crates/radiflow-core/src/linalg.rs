//! Small dense real matrices.
//!
//! Everything here is sized for the 2x2 to 4x4 systems that show up in mode
//! analysis, so the storage is a plain row-major `Vec<f64>` and the
//! factorisations are textbook partial-pivoting LU.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize, m: usize) -> Self {
        Mat { n, m, data: vec![0.0; n * m] }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Mat::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 1.0;
        }
        a
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut a = Mat::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            a[(i, i)] = *v;
        }
        a
    }

    /// Builds a square matrix from row arrays.
    pub fn from_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        let mut data = Vec::with_capacity(N * N);
        for r in rows.iter() {
            data.extend_from_slice(r);
        }
        Mat { n: N, m: N, data }
    }

    pub fn from_vec(n: usize, m: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * m);
        Mat { n, m, data }
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.m
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.n == self.m
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.m, self.n);
        for i in 0..self.n {
            for j in 0..self.m {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat { n: self.n, m: self.m, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n.min(self.m)).map(|i| self[(i, i)]).sum()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.m)
            .map(|j| (0..self.n).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_inf(&self) -> f64 {
        self.transpose().norm1()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// A B - B A.
    pub fn commutator(&self, b: &Mat) -> Mat {
        &(self * b) - &(b * self)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.m);
        (0..self.n)
            .map(|i| (0..self.m).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }

    pub fn apply_complex(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.m);
        (0..self.n)
            .map(|i| {
                (0..self.m).fold(Complex64::new(0.0, 0.0), |acc, j| acc + x[j] * self[(i, j)])
            })
            .collect()
    }

    pub fn lu(&self) -> Option<Lu> {
        Lu::new(self)
    }

    pub fn det(&self) -> f64 {
        match Lu::new(self) {
            Some(lu) => lu.det(),
            None => 0.0,
        }
    }

    pub fn inverse(&self) -> Option<Mat> {
        Lu::new(self).map(|lu| lu.inverse())
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.m + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.m + j]
    }
}

impl<'a> Mul<&'a Mat> for &'a Mat {
    type Output = Mat;
    fn mul(self, b: &Mat) -> Mat {
        assert_eq!(self.m, b.n);
        let mut c = Mat::zeros(self.n, b.m);
        for i in 0..self.n {
            for k in 0..self.m {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..b.m {
                    c[(i, j)] += a * b[(k, j)];
                }
            }
        }
        c
    }
}

impl<'a> Add<&'a Mat> for &'a Mat {
    type Output = Mat;
    fn add(self, b: &Mat) -> Mat {
        assert_eq!((self.n, self.m), (b.n, b.m));
        Mat {
            n: self.n,
            m: self.m,
            data: self.data.iter().zip(&b.data).map(|(x, y)| x + y).collect(),
        }
    }
}

impl<'a> Sub<&'a Mat> for &'a Mat {
    type Output = Mat;
    fn sub(self, b: &Mat) -> Mat {
        assert_eq!((self.n, self.m), (b.n, b.m));
        Mat {
            n: self.n,
            m: self.m,
            data: self.data.iter().zip(&b.data).map(|(x, y)| x - y).collect(),
        }
    }
}

impl Neg for &Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        self.scale(-1.0)
    }
}

/// Partial-pivoting LU factorisation, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Mat,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    /// Returns `None` when a pivot is exactly zero.
    pub fn new(a: &Mat) -> Option<Lu> {
        assert!(a.is_square());
        let n = a.n;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                if lu[(i, k)].abs() > best {
                    best = lu[(i, k)].abs();
                    p = i;
                }
            }
            if best == 0.0 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let piv = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] -= f * v;
                }
            }
        }
        Some(Lu { lu, perm, sign })
    }

    pub fn det(&self) -> f64 {
        (0..self.lu.n).fold(self.sign, |d, i| d * self.lu[(i, i)])
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_mat(&self, b: &Mat) -> Mat {
        let n = self.lu.n;
        let mut x = Mat::zeros(n, b.m);
        let mut col = vec![0.0; n];
        for j in 0..b.m {
            for i in 0..n {
                col[i] = b[(i, j)];
            }
            let s = self.solve(&col);
            for i in 0..n {
                x[(i, j)] = s[i];
            }
        }
        x
    }

    pub fn inverse(&self) -> Mat {
        self.solve_mat(&Mat::identity(self.lu.n))
    }
}

/// Euclidean norm of a complex vector.
pub fn cnorm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

//! Symmetric banded matrices and their Cholesky factorization.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetric matrix stored by its lower band: `band(i, k) = A[i, i−k]`, `k ≤ bw`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSym {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        (hi - lo <= self.bw).then(|| hi * (self.bw + 1) + (hi - lo))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `v` to entry `(i, j)` (and its mirror).
    ///
    /// # Panics
    /// If `(i, j)` lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let w = self.bw + 1;
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let row = &self.data[i * w..(i + 1) * w];
            y[i] += row[0] * x[i];
            for k in 1..=self.bw.min(i) {
                let j = i - k;
                y[i] += row[k] * x[j];
                y[j] += row[k] * x[i];
            }
        }
    }

    /// `xᵀ A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let w = self.bw + 1;
        let mut acc = 0.0;
        for i in 0..self.n {
            let row = &self.data[i * w..(i + 1) * w];
            acc += row[0] * x[i] * y[i];
            for k in 1..=self.bw.min(i) {
                let j = i - k;
                acc += row[k] * (x[i] * y[j] + x[j] * y[i]);
            }
        }
        acc
    }

    /// `a·self + b·other` (same shape).
    pub fn combine(&self, a: f64, other: &BandedSym, b: f64) -> BandedSym {
        assert_eq!((self.n, self.bw), (other.n, other.bw), "band shapes differ");
        BandedSym {
            n: self.n,
            bw: self.bw,
            data: self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn cholesky(&self) -> Result<BandedCholesky> {
        BandedCholesky::factor(self)
    }
}

/// `A = L Lᵀ` with `L` lower-banded, stored like [`BandedSym`].
#[derive(Debug, Clone, PartialEq)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &BandedSym) -> Result<Self> {
        let (n, bw) = (a.n, a.bw);
        let w = bw + 1;
        let mut l = a.data.clone();
        for i in 0..n {
            for k in (1..=bw.min(i)).rev() {
                let j = i - k;
                // L[i,j] = (A[i,j] − Σ_{m<j} L[i,m] L[j,m]) / L[j,j]
                let mut s = l[i * w + k];
                for m in (i.saturating_sub(bw))..j {
                    s -= l[i * w + (i - m)] * l[j * w + (j - m)];
                }
                l[i * w + k] = s / l[j * w];
            }
            let mut d = l[i * w];
            for m in (i.saturating_sub(bw))..i {
                d -= l[i * w + (i - m)].powi(2);
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { row: i, pivot: d });
            }
            l[i * w] = d.sqrt();
        }
        Ok(Self { n, bw, data: l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let w = self.bw + 1;
        for i in 0..self.n {
            let mut s = x[i];
            for k in 1..=self.bw.min(i) {
                s -= self.data[i * w + k] * x[i - k];
            }
            x[i] = s / self.data[i * w];
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for k in 1..=self.bw.min(self.n - 1 - i) {
                s -= self.data[(i + k) * w + k] * x[i + k];
            }
            x[i] = s / self.data[i * w];
        }
    }
}

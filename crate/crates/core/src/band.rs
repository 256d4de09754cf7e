//! Dense and band storage for real symmetric matrices.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row-major `n × n` real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric {
    n: usize,
    data: Vec<f64>,
}

impl DenseSymmetric {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: alloc::vec![0.0; n * n],
        }
    }

    /// Accepts a row-major square matrix that is symmetric to `1e-12`
    /// relative to its largest entry.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidArgument("row-major data must have n*n entries"));
        }
        let scale = data.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..n {
            for j in 0..i {
                if (data[i * n + j] - data[j * n + i]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidArgument("matrix is not symmetric"));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn into_row_major(self) -> Vec<f64> {
        self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Lower band of a real symmetric matrix: entries with `0 <= i - j <= h`.
///
/// Row `i` occupies `data[i*(h+1) .. (i+1)*(h+1)]`, column `j` of that row at
/// offset `j + h - i`. Slots left of column 0 are kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricBand {
    n: usize,
    h: usize,
    data: Vec<f64>,
}

impl SymmetricBand {
    pub fn zeros(n: usize, h: usize) -> Self {
        Self {
            n,
            h,
            data: alloc::vec![0.0; n * (h + 1)],
        }
    }

    /// Storage needed for an `n × n` band of half-bandwidth `h`.
    pub fn storage_len(n: usize, h: usize) -> Option<usize> {
        n.checked_mul(h.checked_add(1)?)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.h
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        (i - j <= self.h).then(|| i * (self.h + 1) + j + self.h - i)
    }

    /// Zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// # Panics
    /// If `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside the band");
        self.data[s] = v;
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    /// Copy with a wider band; new diagonals are zero.
    pub fn widened(&self, h: usize) -> Self {
        assert!(h >= self.h);
        let mut out = Self::zeros(self.n, h);
        for i in 0..self.n {
            for j in i.saturating_sub(self.h)..=i {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }

    /// Lower-band `(row, col, value)` triplets, row-major, 0-based.
    pub fn lower_triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (i.saturating_sub(self.h)..=i).map(move |j| (i, j, self.get(i, j)))
        })
    }

    pub fn to_dense(&self) -> DenseSymmetric {
        let mut d = DenseSymmetric::zeros(self.n);
        for (i, j, v) in self.lower_triplets() {
            d.set(i, j, v);
        }
        d
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.lower_triplets()
            .map(|(i, j, v)| if i == j { v * v } else { 2.0 * v * v })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

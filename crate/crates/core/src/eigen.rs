//! Eigenvalues of real symmetric matrices.
//!
//! Both paths end in the same implicit-shift QL kernel on a tridiagonal
//! matrix. The dense path reaches tridiagonal form by Householder
//! reflections; the band path chases Givens bulges down the band so that the
//! work stays proportional to `n² h` and storage to `n h`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::band::{DenseSymmetric, SymmetricBand};
use crate::error::{Error, Result};

/// Per-solve counters and the trace/Frobenius identity residuals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    /// `|Σλ - tr A|`.
    pub trace_residual: f64,
    /// `|Σλ² - ‖A‖_F²|`.
    pub frobenius_residual: f64,
    pub max_abs_entry: f64,
}

impl SolverDiagnostics {
    /// Trace identity within `tol · n · max|a|`, Frobenius within `tol · n · max|a|²`.
    pub fn identities_hold(&self, n: usize, tol: f64) -> bool {
        let a = self.max_abs_entry;
        self.trace_residual <= tol * n as f64 * a
            && self.frobenius_residual <= tol * n as f64 * a * a
    }
}

/// Sorted eigenvalues of one matrix plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    pub eigenvalues: Vec<f64>,
    /// Digest of the ensemble spec the matrix came from (0 when unknown).
    pub fingerprint: u64,
    pub diagnostics: SolverDiagnostics,
}

impl SpectralSample {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Householder reduction in place; returns `(diagonal, off-diagonal)` with
/// `off[i]` coupling `i` and `i + 1`.
fn householder_tridiagonal(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let idx = |i: usize, j: usize| i * n + j;
    let mut d = alloc::vec![0.0; n];
    let mut e = alloc::vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        if l == 0 {
            e[i] = a[idx(i, l)];
            continue;
        }
        let scale: f64 = (0..=l).map(|k| a[idx(i, k)].abs()).sum();
        if scale == 0.0 {
            e[i] = a[idx(i, l)];
            continue;
        }
        let mut h = 0.0;
        for k in 0..=l {
            a[idx(i, k)] /= scale;
            h += a[idx(i, k)] * a[idx(i, k)];
        }
        let f = a[idx(i, l)];
        let g = if f >= 0.0 { -libm::sqrt(h) } else { libm::sqrt(h) };
        e[i] = scale * g;
        h -= f * g;
        a[idx(i, l)] = f - g;
        // p = A u / h, stored in e[0..=l]
        let mut f = 0.0;
        for j in 0..=l {
            let mut g = 0.0;
            for k in 0..=j {
                g += a[idx(j, k)] * a[idx(i, k)];
            }
            for k in j + 1..=l {
                g += a[idx(k, j)] * a[idx(i, k)];
            }
            e[j] = g / h;
            f += e[j] * a[idx(i, j)];
        }
        let hh = f / (h + h);
        for j in 0..=l {
            let f = a[idx(i, j)];
            let g = e[j] - hh * f;
            e[j] = g;
            for k in 0..=j {
                a[idx(j, k)] -= f * e[k] + g * a[idx(i, k)];
            }
        }
    }
    for (i, di) in d.iter_mut().enumerate() {
        *di = a[idx(i, i)];
    }
    // shift so that off[i] couples i and i + 1
    let mut off = alloc::vec![0.0; n];
    if n > 0 {
        off[..n - 1].copy_from_slice(&e[1..]);
    }
    (d, off)
}

/// Implicit QL with Wilkinson-type shifts; eigenvalues overwrite `d`.
///
/// `e[i]` couples `i` and `i + 1`; `e[n-1]` is ignored. Returns the number
/// of QL sweeps.
pub fn tridiagonal_eigenvalues(d: &mut [f64], e: &mut [f64]) -> Result<usize> {
    let n = d.len();
    assert_eq!(e.len(), n, "off-diagonal buffer must have length n");
    if n == 0 {
        return Ok(0);
    }
    e[n - 1] = 0.0;
    let max_iterations = 30 * n.max(1);
    let mut iterations = 0;
    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m] == 0.0 {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > max_iterations {
                return Err(Error::NoConvergence {
                    iterations,
                    residual: e[l].abs(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(iterations)
}

fn finish(
    mut d: Vec<f64>,
    mut e: Vec<f64>,
    trace: f64,
    frobenius_sq: f64,
    max_abs_entry: f64,
) -> Result<SpectralSample> {
    let iterations = tridiagonal_eigenvalues(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    let sum: f64 = d.iter().sum();
    let sum_sq: f64 = d.iter().map(|v| v * v).sum();
    Ok(SpectralSample {
        eigenvalues: d,
        fingerprint: 0,
        diagnostics: SolverDiagnostics {
            iterations,
            trace_residual: (sum - trace).abs(),
            frobenius_residual: (sum_sq - frobenius_sq).abs(),
            max_abs_entry,
        },
    })
}

/// All eigenvalues of a dense symmetric matrix, ascending.
pub fn eigenvalues_dense(a: &DenseSymmetric) -> Result<SpectralSample> {
    let n = a.dim();
    let (trace, fro, max_abs) = (a.trace(), a.frobenius_sq(), a.max_abs());
    let mut work = a.clone().into_row_major();
    let (d, e) = householder_tridiagonal(&mut work, n);
    finish(d, e, trace, fro, max_abs)
}

/// Band storage with one extra diagonal to hold the travelling bulge.
struct BandWork {
    n: usize,
    w: usize,
    data: Vec<f64>,
}

impl BandWork {
    fn new(a: &SymmetricBand) -> Self {
        let n = a.dim();
        let w = a.half_bandwidth() + 1;
        let mut data = alloc::vec![0.0; n * (w + 1)];
        for (i, j, v) in a.lower_triplets() {
            data[i * (w + 1) + j + w - i] = v;
        }
        Self { n, w, data }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.w);
        i * (self.w + 1) + j + self.w - i
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.at(i, j)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.at(i, j);
        self.data[s] = v;
    }

    /// Similarity by the Givens rotation on rows/columns `(q-1, q)` that
    /// zeroes `(q, col)`.
    fn rotate_out(&mut self, q: usize, col: usize) {
        let p = q - 1;
        let x = self.get(p, col);
        let y = self.get(q, col);
        let r = libm::hypot(x, y);
        if r == 0.0 {
            return;
        }
        let (c, s) = (x / r, y / r);
        let lo = q.saturating_sub(self.w);
        let hi = (p + self.w).min(self.n - 1);
        for l in lo..=hi {
            if l == p || l == q {
                continue;
            }
            let (ap, aq) = (self.get(p, l), self.get(q, l));
            self.set(p, l, c * ap + s * aq);
            self.set(q, l, -s * ap + c * aq);
        }
        let (app, apq, aqq) = (self.get(p, p), self.get(p, q), self.get(q, q));
        let cs = c * s;
        self.set(p, p, c * c * app + 2.0 * cs * apq + s * s * aqq);
        self.set(q, q, s * s * app - 2.0 * cs * apq + c * c * aqq);
        self.set(p, q, (c * c - s * s) * apq + cs * (aqq - app));
        self.set(q, col, 0.0);
    }
}

/// Givens band-to-tridiagonal reduction: for each column, entries outside
/// the tridiagonal are removed from the outside in, and each rotation's bulge
/// (one position beyond the band) is chased off the bottom.
fn band_tridiagonal(a: &SymmetricBand) -> (Vec<f64>, Vec<f64>) {
    let n = a.dim();
    let h = a.half_bandwidth();
    let mut work = BandWork::new(a);
    if h > 1 {
        for j in 0..n.saturating_sub(2) {
            for k in (2..=h.min(n - 1 - j)).rev() {
                let (mut row, mut col) = (j + k, j);
                loop {
                    if work.get(row, col) == 0.0 {
                        break;
                    }
                    work.rotate_out(row, col);
                    let next = row + h;
                    if next >= n {
                        break;
                    }
                    col = row - 1;
                    row = next;
                }
            }
        }
    }
    let d = (0..n).map(|i| work.get(i, i)).collect();
    let e = (0..n)
        .map(|i| if i + 1 < n { work.get(i + 1, i) } else { 0.0 })
        .collect();
    (d, e)
}

/// All eigenvalues of a band-stored symmetric matrix, ascending.
pub fn eigenvalues_band(a: &SymmetricBand) -> Result<SpectralSample> {
    let (trace, fro, max_abs) = (a.trace(), a.frobenius_sq(), a.max_abs());
    let (d, e) = band_tridiagonal(a);
    finish(d, e, trace, fro, max_abs)
}

//! Spectral statistics: moments, Kolmogorov–Smirnov distances, standard errors.

use alloc::vec::Vec;

use crate::density::DensityModel;
use crate::eigen::SpectralSample;
use crate::error::{Error, Result};

pub const MAX_EMPIRICAL_MOMENT: usize = 16;

/// `(1/n) Σ λ^k` for `k = 1..=k_max`.
pub fn empirical_moments(sample: &SpectralSample, k_max: usize) -> Result<Vec<f64>> {
    moments_of(&sample.eigenvalues, k_max)
}

/// [`empirical_moments`] on a bare slice.
pub fn moments_of(values: &[f64], k_max: usize) -> Result<Vec<f64>> {
    if k_max > MAX_EMPIRICAL_MOMENT {
        return Err(Error::SizeLimit {
            what: "moment order k_max",
            value: k_max,
            max: MAX_EMPIRICAL_MOMENT,
        });
    }
    if values.is_empty() {
        return Err(Error::InvalidArgument("moments need at least one value"));
    }
    let mut sums = alloc::vec![0.0; k_max];
    for &x in values {
        let mut p = 1.0;
        for s in sums.iter_mut() {
            p *= x;
            *s += p;
        }
    }
    let n = values.len() as f64;
    Ok(sums.into_iter().map(|s| s / n).collect())
}

/// `sup_x |F_n(x) - F(x)|` for ascending `sorted`, evaluated on both sides
/// of every jump of the empirical CDF.
pub fn ks_sorted<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::InvalidArgument("KS distance needs at least one value"));
    }
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// KS distance between a spectrum and a model CDF.
pub fn ks_distance(sample: &SpectralSample, model: &DensityModel) -> Result<f64> {
    if sample.eigenvalues.windows(2).all(|w| w[0] <= w[1]) {
        ks_sorted(&sample.eigenvalues, |x| model.cdf(x))
    } else {
        let mut v = sample.eigenvalues.clone();
        v.sort_by(f64::total_cmp);
        ks_sorted(&v, |x| model.cdf(x))
    }
}

/// Two-sample KS statistic for ascending inputs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("KS distance needs non-empty samples"));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

/// Two-pass mean / standard error; needs at least two values.
pub fn mean_se(values: &[f64]) -> Result<MeanSe> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument("standard error needs at least two values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(MeanSe {
        mean,
        se: libm::sqrt(var / n),
    })
}

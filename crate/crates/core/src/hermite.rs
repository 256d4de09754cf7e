//! Probabilists' Hermite polynomials and the normalized oscillator wave
//! functions built from them.
//!
//! `ψ_j(x) = e^{-x²/4} He_j(x) / sqrt(sqrt(2π) j!)`, so that the family is
//! orthonormal on the real line. The wave functions are evaluated with a
//! recurrence that carries the `1/sqrt(j!)` factor step by step, which keeps
//! every intermediate in floating range for the degrees used here.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Largest degree accepted by [`hermite`] and [`wave_function`].
pub const MAX_DEGREE: usize = 200;

/// `(2π)^{-1/4}`, the value of `ψ_0(0)`.
pub const PSI0_AT_ZERO: f64 = 0.631_618_777_746_064_7;

fn check_degree(j: usize) -> Result<()> {
    if j > MAX_DEGREE {
        return Err(Error::DegreeLimit {
            degree: j,
            max: MAX_DEGREE,
        });
    }
    Ok(())
}

/// `He_j(x)` via `He_{j+1} = x He_j - j He_{j-1}`.
pub fn hermite(j: usize, x: f64) -> Result<f64> {
    check_degree(j)?;
    let (mut prev, mut cur) = (1.0, x);
    if j == 0 {
        return Ok(prev);
    }
    for n in 1..j {
        let next = x * cur - n as f64 * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `ψ_j(x)`.
pub fn wave_function(j: usize, x: f64) -> Result<f64> {
    let table = WaveFunctionTable::new(j)?;
    Ok(table.eval(x)[j])
}

// Writes ψ_0(x)..ψ_{out.len()-1}(x).
fn fill_wave_functions(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PSI0_AT_ZERO * libm::exp(-0.25 * x * x);
    if out.len() == 1 {
        return;
    }
    out[1] = x * out[0];
    for n in 1..out.len() - 1 {
        let nf = n as f64;
        out[n + 1] = (x * out[n] - libm::sqrt(nf) * out[n - 1]) / libm::sqrt(nf + 1.0);
    }
}

/// Evaluates `ψ_0 ..= ψ_max_degree` together at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaveFunctionTable {
    max_degree: usize,
}

impl WaveFunctionTable {
    pub fn new(max_degree: usize) -> Result<Self> {
        check_degree(max_degree)?;
        Ok(Self { max_degree })
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// All `max_degree + 1` values at `x`, lowest degree first.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.max_degree + 1];
        fill_wave_functions(x, &mut out);
        out
    }

    /// Same as [`eval`](Self::eval) without allocating.
    ///
    /// # Panics
    /// If `out` is shorter than `max_degree + 1`.
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        fill_wave_functions(x, &mut out[..=self.max_degree]);
    }

    /// `Σ_{j<count} ψ_j(x)²` for `count <= max_degree + 1`.
    pub fn sum_of_squares(&self, x: f64, count: usize) -> f64 {
        let values = self.eval(x);
        values[..count].iter().map(|v| v * v).sum()
    }
}

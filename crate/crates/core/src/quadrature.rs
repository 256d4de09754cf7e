//! Gauss–Legendre rules, composite panels and a bisecting adaptive integrator.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are found by Newton iteration on `P_n` from the Chebyshev-like
    /// initial guesses `cos(π (i + 3/4) / (n + 1/2))`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut z = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() <= 1e-16 * z.abs().max(1.0) {
                    let (_, d) = legendre_with_derivative(n, z);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Equal-width panels on `[a, b]`, each integrated with `rule`.
pub fn composite<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    panels: usize,
    mut f: F,
) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * h;
            rule.integrate(lo, lo + h, &mut f)
        })
        .sum()
}

/// `∫_a^{x_i} f` for each of the ascending `points`, accumulated gap by gap;
/// gaps wider than `max_step` are split into equal panels.
pub fn cumulative<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    points: &[f64],
    max_step: f64,
    mut f: F,
) -> Vec<f64> {
    let mut acc = 0.0;
    let mut left = a;
    points
        .iter()
        .map(|&x| {
            debug_assert!(x >= left);
            let panels = libm::ceil((x - left) / max_step).max(1.0) as usize;
            acc += composite(rule, left, x, panels, &mut f);
            left = x;
            acc
        })
        .collect()
}

/// Adaptive bisection: a panel is accepted when one `rule` application and
/// the sum over its two halves agree to `tol` scaled by the panel's share
/// of the interval.
pub fn adaptive<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
    mut f: F,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let whole = rule.integrate(a, b, &mut f);
    let mut worst = 0.0f64;
    let value = bisect(rule, a, b, whole, tol, max_depth, &mut f, &mut worst);
    if worst > tol {
        return Err(Error::Quadrature {
            residual: worst,
            tolerance: tol,
        });
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn bisect<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    f: &mut F,
    worst: &mut f64,
) -> f64 {
    let mid = 0.5 * (a + b);
    let left = rule.integrate(a, mid, &mut *f);
    let right = rule.integrate(mid, b, &mut *f);
    let diff = (left + right - whole).abs();
    if diff <= tol {
        return left + right;
    }
    if depth == 0 {
        *worst = worst.max(diff);
        return left + right;
    }
    bisect(rule, a, mid, left, 0.5 * tol, depth - 1, f, worst)
        + bisect(rule, mid, b, right, 0.5 * tol, depth - 1, f, worst)
}

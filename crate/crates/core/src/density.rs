//! Limiting spectral densities of the two block Toeplitz band ensembles.
//!
//! * `f_m(x) = m^{-1/2} Σ_{j<m} ψ_j(√m x)²`, the scaled GUE one-point function.
//! * `g_m(x) = f_m(x) + (m/2)^{1/2} ψ_{m-1}(√m x) ∫ ε(x-t) ψ_m(√m t) dt + α_m(x)`
//!   with `ε(x) = sign(x)/2` and, for odd `m = 2s+1`,
//!   `α_m(x) = ψ_{2s}(√m x) / (m ∫ ψ_{2s}(√m t) dt)`; `α_m = 0` for even `m`.
//!
//! `g_m` is evaluated exactly as written above. It is not normalized for odd
//! `m` and its moments do not reproduce the GOE Wick moments (see
//! [`DensityModel::total_mass`]), so GOE spectra are also checked against a
//! direct GOE sampler elsewhere.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::WaveFunctionTable;
use crate::quadrature::{self, GaussLegendre};

/// Largest block order supported by the densities.
pub const MAX_BLOCK_ORDER: usize = 64;

/// Largest moment order accepted by [`DensityModel::moment`].
pub const MAX_MOMENT_ORDER: usize = 16;

const INNER_TOLERANCE: f64 = 1e-13;
const INNER_MAX_DEPTH: u32 = 40;
const CUMULATIVE_STEP: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleClass {
    Gue,
    Goe,
}

impl EnsembleClass {
    pub fn name(self) -> &'static str {
        match self {
            EnsembleClass::Gue => "gue",
            EnsembleClass::Goe => "goe",
        }
    }
}

/// `ε(x) = sign(x)/2` with `sign(0) = 0`.
pub fn epsilon(x: f64) -> f64 {
    if x > 0.0 {
        0.5
    } else if x < 0.0 {
        -0.5
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Integration domain is `[-radius, radius]`.
    pub radius: f64,
    pub panels: usize,
    /// Gauss–Legendre points per panel.
    pub order: usize,
    /// Uniform CDF cache points, endpoints included.
    pub cdf_points: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        // 128 x 16 = 2048 nodes; e^{-14²/2} is far below 1e-16.
        Self {
            radius: 14.0,
            panels: 128,
            order: 16,
            cdf_points: 4001,
        }
    }
}

fn check_block_order(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("block order m must be at least 1"));
    }
    if m > MAX_BLOCK_ORDER {
        return Err(Error::SizeLimit {
            what: "block order m",
            value: m,
            max: MAX_BLOCK_ORDER,
        });
    }
    Ok(())
}

/// `f_m(x)`.
pub fn gue_density(m: usize, x: f64) -> Result<f64> {
    check_block_order(m)?;
    let table = WaveFunctionTable::new(m)?;
    let mut buf = alloc::vec![0.0; m + 1];
    Ok(gue_kernel(&table, m, x, &mut buf))
}

fn gue_kernel(table: &WaveFunctionTable, m: usize, x: f64, buf: &mut [f64]) -> f64 {
    let sm = libm::sqrt(m as f64);
    table.eval_into(sm * x, buf);
    buf[..m].iter().map(|v| v * v).sum::<f64>() / sm
}

/// `g_m(x)`, with the `ε` integral computed adaptively on the default domain.
pub fn goe_density(m: usize, x: f64) -> Result<f64> {
    check_block_order(m)?;
    let terms = GoeTerms::new(m, &QuadratureConfig::default())?;
    terms.pointwise(x)
}

/// Constants of `g_m` that do not depend on `x`.
#[derive(Debug, Clone)]
struct GoeTerms {
    m: usize,
    radius: f64,
    table: WaveFunctionTable,
    /// `∫ ψ_m(√m t) dt`.
    inner_total: f64,
    /// `∫ ψ_{2s}(√m t) dt` for `m = 2s + 1`.
    alpha_denominator: Option<f64>,
    rule: GaussLegendre,
}

impl GoeTerms {
    fn new(m: usize, config: &QuadratureConfig) -> Result<Self> {
        let table = WaveFunctionTable::new(m)?;
        let rule = GaussLegendre::new(config.order);
        let sm = libm::sqrt(m as f64);
        let r = config.radius;
        let psi = |j: usize, t: f64| table.eval(sm * t)[j];
        let inner_total = quadrature::composite(&rule, -r, r, config.panels, |t| psi(m, t));
        let alpha_denominator = (m % 2 == 1).then(|| {
            let s = (m - 1) / 2;
            quadrature::composite(&rule, -r, r, config.panels, |t| psi(2 * s, t))
        });
        Ok(Self {
            m,
            radius: r,
            table,
            inner_total,
            alpha_denominator,
            rule: GaussLegendre::new(10),
        })
    }

    fn inner(&self, t: f64) -> f64 {
        let sm = libm::sqrt(self.m as f64);
        self.table.eval(sm * t)[self.m]
    }

    /// `g_m(x)` given the two halves `∫_{-R}^{x}` and `∫_{x}^{R}` of `ψ_m(√m t) dt`.
    fn with_halves(&self, x: f64, lower: f64, upper: f64, buf: &mut [f64]) -> f64 {
        let m = self.m;
        let sm = libm::sqrt(m as f64);
        self.table.eval_into(sm * x, buf);
        let f = buf[..m].iter().map(|v| v * v).sum::<f64>() / sm;
        let eps_integral = 0.5 * (lower - upper);
        let cross = libm::sqrt(0.5 * m as f64) * buf[m - 1] * eps_integral;
        // m = 2s + 1 here, so ψ_{2s} is buf[m - 1].
        let alpha = match self.alpha_denominator {
            Some(den) => buf[m - 1] / (m as f64 * den),
            None => 0.0,
        };
        f + cross + alpha
    }

    fn pointwise(&self, x: f64) -> Result<f64> {
        let r = self.radius;
        let xc = x.clamp(-r, r);
        let lower = quadrature::adaptive(&self.rule, -r, xc, INNER_TOLERANCE, INNER_MAX_DEPTH, |t| {
            self.inner(t)
        })?;
        let upper = quadrature::adaptive(&self.rule, xc, r, INNER_TOLERANCE, INNER_MAX_DEPTH, |t| {
            self.inner(t)
        })?;
        let mut buf = alloc::vec![0.0; self.m + 1];
        Ok(self.with_halves(x, lower, upper, &mut buf))
    }

    /// `g_m` at ascending `xs`, sharing one running `ε` integral.
    fn at_sorted(&self, xs: &[f64]) -> Vec<f64> {
        let r = self.radius;
        let clamped: Vec<f64> = xs.iter().map(|x| x.clamp(-r, r)).collect();
        let lower = quadrature::cumulative(&self.rule, -r, &clamped, CUMULATIVE_STEP, |t| self.inner(t));
        let mut buf = alloc::vec![0.0; self.m + 1];
        xs.iter()
            .zip(lower)
            .map(|(&x, lo)| self.with_halves(x, lo, self.inner_total - lo, &mut buf))
            .collect()
    }
}

/// A limiting density with cached quadrature nodes and a CDF grid.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct DensityModel {
    m: usize,
    class: EnsembleClass,
    config: QuadratureConfig,
    goe: Option<GoeTerms>,
    /// Composite-rule nodes, weights and pdf values on `[-R, R]`.
    nodes: Vec<(f64, f64, f64)>,
    grid: Vec<f64>,
    pdf_grid: Vec<f64>,
    cdf_grid: Vec<f64>,
}

impl DensityModel {
    pub fn new(class: EnsembleClass, m: usize) -> Result<Self> {
        Self::with_config(class, m, QuadratureConfig::default())
    }

    pub fn with_config(class: EnsembleClass, m: usize, config: QuadratureConfig) -> Result<Self> {
        check_block_order(m)?;
        if config.panels == 0 || config.order == 0 || config.cdf_points < 2 {
            return Err(Error::InvalidArgument("quadrature config needs panels, order >= 1 and cdf_points >= 2"));
        }
        if !(config.radius > 0.0 && config.radius.is_finite()) {
            return Err(Error::InvalidArgument("quadrature radius must be positive and finite"));
        }
        let goe = match class {
            EnsembleClass::Gue => None,
            EnsembleClass::Goe => Some(GoeTerms::new(m, &config)?),
        };
        let mut model = Self {
            m,
            class,
            config,
            goe,
            nodes: Vec::new(),
            grid: Vec::new(),
            pdf_grid: Vec::new(),
            cdf_grid: Vec::new(),
        };

        let r = config.radius;
        let rule = GaussLegendre::new(config.order);
        let h = 2.0 * r / config.panels as f64;
        let mut xs = Vec::with_capacity(config.panels * config.order);
        let mut ws = Vec::with_capacity(xs.capacity());
        for p in 0..config.panels {
            let lo = -r + p as f64 * h;
            for (x, w) in rule.mapped(lo, lo + h) {
                xs.push(x);
                ws.push(w);
            }
        }
        let pdf = model.pdf_sorted(&xs);
        model.nodes = xs.into_iter().zip(ws).zip(pdf).map(|((x, w), p)| (x, w, p)).collect();

        let n = config.cdf_points;
        let step = 2.0 * r / (n - 1) as f64;
        model.grid = (0..n).map(|i| -r + i as f64 * step).collect();
        model.grid[n - 1] = r;
        model.pdf_grid = model.pdf_sorted(&model.grid);
        let cell_rule = GaussLegendre::new(6);
        let mut cell_x = Vec::with_capacity((n - 1) * cell_rule.len());
        let mut cell_w = Vec::with_capacity(cell_x.capacity());
        for win in model.grid.windows(2) {
            for (x, w) in cell_rule.mapped(win[0], win[1]) {
                cell_x.push(x);
                cell_w.push(w);
            }
        }
        let cell_pdf = model.pdf_sorted(&cell_x);
        let mut acc = 0.0;
        model.cdf_grid.push(0.0);
        for (ws, ps) in cell_w
            .chunks(cell_rule.len())
            .zip(cell_pdf.chunks(cell_rule.len()))
        {
            acc += ws.iter().zip(ps).map(|(w, p)| w * p).sum::<f64>();
            model.cdf_grid.push(acc);
        }
        Ok(model)
    }

    pub fn block_order(&self) -> usize {
        self.m
    }

    pub fn class(&self) -> EnsembleClass {
        self.class
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.config
    }

    fn pdf_sorted(&self, xs: &[f64]) -> Vec<f64> {
        match &self.goe {
            None => {
                let table = WaveFunctionTable::new(self.m).expect("checked block order");
                let mut buf = alloc::vec![0.0; self.m + 1];
                xs.iter().map(|&x| gue_kernel(&table, self.m, x, &mut buf)).collect()
            }
            Some(goe) => goe.at_sorted(xs),
        }
    }

    /// Pointwise density; the GOE `ε` integral is computed adaptively.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        match &self.goe {
            None => gue_density(self.m, x),
            Some(goe) => goe.pointwise(x),
        }
    }

    /// Cumulative mass from `-R`, interpolated on the cache grid by cubic
    /// Hermite segments (slopes are the cached pdf values) clamped to each
    /// cell's endpoint values, so the result is monotone wherever the cached
    /// CDF is.
    pub fn cdf(&self, x: f64) -> f64 {
        let r = self.config.radius;
        if x.is_nan() {
            return f64::NAN;
        }
        if x <= -r {
            return 0.0;
        }
        let n = self.grid.len();
        if x >= r {
            return self.cdf_grid[n - 1];
        }
        let step = 2.0 * r / (n - 1) as f64;
        let i = (((x + r) / step) as usize).min(n - 2);
        let h = self.grid[i + 1] - self.grid[i];
        let t = ((x - self.grid[i]) / h).clamp(0.0, 1.0);
        let (c0, c1) = (self.cdf_grid[i], self.cdf_grid[i + 1]);
        let (p0, p1) = (self.pdf_grid[i], self.pdf_grid[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * c0
            + (t3 - 2.0 * t2 + t) * h * p0
            + (-2.0 * t3 + 3.0 * t2) * c1
            + (t3 - t2) * h * p1;
        v.clamp(c0.min(c1), c0.max(c1))
    }

    /// `∫ pdf` over the truncated domain.
    pub fn total_mass(&self) -> f64 {
        self.nodes.iter().map(|&(_, w, p)| w * p).sum()
    }

    /// `∫ x^k pdf(x) dx`.
    pub fn moment(&self, k: usize) -> Result<f64> {
        if k > MAX_MOMENT_ORDER {
            return Err(Error::SizeLimit {
                what: "moment order k",
                value: k,
                max: MAX_MOMENT_ORDER,
            });
        }
        Ok(self
            .nodes
            .iter()
            .map(|&(x, w, p)| w * powi(x, k) * p)
            .sum())
    }

    /// Uniform grid of `(x, pdf, cdf)` rows on `[lo, hi]`.
    pub fn grid_dump(&self, lo: f64, hi: f64, points: usize) -> Result<Vec<(f64, f64, f64)>> {
        if points == 0 || !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::InvalidArgument("grid needs lo <= hi and at least one point"));
        }
        if points > 1 && lo == hi {
            return Err(Error::InvalidArgument("grid with several points needs lo < hi"));
        }
        let xs: Vec<f64> = (0..points)
            .map(|i| {
                if points == 1 {
                    lo
                } else {
                    lo + (hi - lo) * i as f64 / (points - 1) as f64
                }
            })
            .collect();
        let pdf = self.pdf_sorted(&xs);
        Ok(xs
            .into_iter()
            .zip(pdf)
            .map(|(x, p)| (x, p, self.cdf(x)))
            .collect())
    }
}

pub fn density_cdf(model: &DensityModel, x: f64) -> f64 {
    model.cdf(x)
}

pub fn density_moment(model: &DensityModel, k: usize) -> Result<f64> {
    model.moment(k)
}

fn powi(x: f64, k: usize) -> f64 {
    let mut acc = 1.0;
    for _ in 0..k {
        acc *= x;
    }
    acc
}

//! Random block Toeplitz band matrices.
//!
//! `T_N = (A_{i-j})_{i,j=1..N}` is built from `m × m` blocks with
//! `A_{-s} = A_sᵀ` and `A_s = 0` for `|s| > b_N`, so `T_N` is real symmetric
//! of order `mN`. Entries are centred with unit variance, except that the
//! symmetric-block ensemble doubles the variance of block diagonals.

use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::band::SymmetricBand;
use crate::error::{Error, Result};
use crate::rng::{entry_key, mix64, unit_f64, StreamFamily};

/// Default cap on stored band entries (8 GiB of `f64`).
pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 30;

const MAX_BLOCK_ORDER: usize = 1 << 16;

/// How `b_N` grows with the block count `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "snake_case")]
pub enum BandwidthSchedule {
    /// `⌈N^α⌉`, `0 < α < 1`.
    PowerLaw(f64),
    /// `⌈c ln N⌉`, `c > 0`.
    Logarithmic(f64),
    Fixed(usize),
}

impl BandwidthSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BandwidthSchedule::PowerLaw(a) if !(a > 0.0 && a < 1.0) => {
                Err(Error::InvalidArgument("power-law exponent must lie in (0, 1)"))
            }
            BandwidthSchedule::Logarithmic(c) if !(c > 0.0 && c.is_finite()) => {
                Err(Error::InvalidArgument("logarithmic coefficient must be positive"))
            }
            BandwidthSchedule::Fixed(0) => Err(Error::InvalidArgument("fixed bandwidth must be at least 1")),
            _ => Ok(()),
        }
    }

    /// `b_N` clamped to `[1, N-1]` (0 when `N = 1`).
    pub fn resolve(&self, n: usize) -> usize {
        let raw = match *self {
            BandwidthSchedule::PowerLaw(a) => ceil_robust(libm::pow(n as f64, a)),
            BandwidthSchedule::Logarithmic(c) => ceil_robust(c * libm::log(n as f64)),
            BandwidthSchedule::Fixed(b) => b,
        };
        raw.clamp(1.min(n.saturating_sub(1)), n.saturating_sub(1))
    }

    /// `b_N → ∞` and `b_N = o(N)`.
    pub fn grows_slowly(&self) -> bool {
        !matches!(self, BandwidthSchedule::Fixed(_))
    }

    /// Whether `Σ_N b_N^{-2}` converges along the schedule.
    pub fn almost_sure(&self) -> bool {
        matches!(*self, BandwidthSchedule::PowerLaw(a) if a > 0.5)
    }
}

// ⌈x⌉, treating values within 1e-9 of an integer as that integer so that
// e.g. 100^0.5 resolves to 10 regardless of the last ulp of `pow`.
fn ceil_robust(x: f64) -> usize {
    let r = libm::round(x);
    let v = if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        libm::ceil(x)
    };
    if v <= 0.0 {
        0
    } else {
        v as usize
    }
}

pub fn resolve_bandwidth(schedule: &BandwidthSchedule, n: usize) -> usize {
    schedule.resolve(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryClass {
    /// Real blocks with `A_{-s} = A_sᵀ`; limit is the GUE one-point function.
    TransposeCoupled,
    /// `A_s = A_{-s} = A_sᵀ` with diagonal variance 2; limit is GOE.
    SymmetricBlocks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryDistribution {
    Gaussian,
    #[default]
    Rademacher,
    /// Uniform on `[-√3, √3]`.
    UniformScaled,
}

impl EntryDistribution {
    /// One draw with mean 0 and variance 1.
    pub fn sample<R: rand_chacha::rand_core::RngCore>(self, rng: &mut R) -> f64 {
        match self {
            EntryDistribution::Gaussian => StandardNormal.sample(rng),
            EntryDistribution::Rademacher => {
                if rng.next_u32() & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryDistribution::UniformScaled => {
                let s = libm::sqrt(3.0);
                s * (2.0 * unit_f64(rng) - 1.0)
            }
        }
    }
}

/// Largest order accepted by [`entry_distribution_moments`].
pub const MAX_ENTRY_MOMENT: usize = 8;

/// Exact `E[a^k]` of a unit-variance entry distribution.
pub fn entry_distribution_moments(dist: EntryDistribution, k: usize) -> Result<f64> {
    if k > MAX_ENTRY_MOMENT {
        return Err(Error::SizeLimit {
            what: "entry moment order k",
            value: k,
            max: MAX_ENTRY_MOMENT,
        });
    }
    if k % 2 == 1 {
        return Ok(0.0);
    }
    Ok(match dist {
        EntryDistribution::Gaussian => (1..k).step_by(2).map(|v| v as f64).product(),
        EntryDistribution::Rademacher => 1.0,
        EntryDistribution::UniformScaled => libm::pow(3.0, k as f64 / 2.0) / (k + 1) as f64,
    })
}

/// Full description of one ensemble draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    /// Block count `N`.
    #[serde(rename = "N")]
    pub n: usize,
    /// Block order.
    pub m: usize,
    pub bandwidth: BandwidthSchedule,
    pub symmetry_class: SymmetryClass,
    #[serde(default)]
    pub distribution: EntryDistribution,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument("block count N must be at least 2"));
        }
        if self.m == 0 {
            return Err(Error::InvalidArgument("block order m must be at least 1"));
        }
        if self.m >= MAX_BLOCK_ORDER {
            return Err(Error::SizeLimit {
                what: "block order m",
                value: self.m,
                max: MAX_BLOCK_ORDER - 1,
            });
        }
        self.bandwidth.validate()
    }

    pub fn resolved_bandwidth(&self) -> usize {
        self.bandwidth.resolve(self.n)
    }

    /// Matrix order `mN`.
    pub fn dimension(&self) -> usize {
        self.m * self.n
    }

    /// Half-bandwidth of `T_N` in scalar entries, `m b_N + m - 1`.
    pub fn half_bandwidth(&self) -> usize {
        self.m * self.resolved_bandwidth() + self.m - 1
    }

    /// Stable 64-bit digest of all fields.
    pub fn fingerprint(&self) -> u64 {
        let (kind, param) = match self.bandwidth {
            BandwidthSchedule::PowerLaw(a) => (1, a.to_bits()),
            BandwidthSchedule::Logarithmic(c) => (2, c.to_bits()),
            BandwidthSchedule::Fixed(b) => (3, b as u64),
        };
        let class = match self.symmetry_class {
            SymmetryClass::TransposeCoupled => 1,
            SymmetryClass::SymmetricBlocks => 2,
        };
        let dist = match self.distribution {
            EntryDistribution::Gaussian => 1,
            EntryDistribution::Rademacher => 2,
            EntryDistribution::UniformScaled => 3,
        };
        [self.n as u64, self.m as u64, kind, param, class, dist, self.seed]
            .iter()
            .fold(0u64, |acc, &v| mix64(acc ^ mix64(v)))
    }
}

/// The blocks `A_0, …, A_{b_N}`, each row-major `m × m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockFamily {
    m: usize,
    blocks: Vec<Vec<f64>>,
}

impl BlockFamily {
    pub fn block_order(&self) -> usize {
        self.m
    }

    pub fn bandwidth(&self) -> usize {
        self.blocks.len() - 1
    }

    /// Entry `(i, j)` of `A_s` for `|s| <= b_N`, using `A_{-s} = A_sᵀ`.
    pub fn entry(&self, s: isize, i: usize, j: usize) -> f64 {
        let k = s.unsigned_abs();
        if k >= self.blocks.len() {
            return 0.0;
        }
        if s >= 0 {
            self.blocks[k][i * self.m + j]
        } else {
            self.blocks[k][j * self.m + i]
        }
    }

    pub fn block(&self, s: usize) -> &[f64] {
        &self.blocks[s]
    }
}

/// Draws `A_0..A_{b_N}`. Entry `(i, j)` of `A_s` comes from stream
/// `(seed, s, i, j)` (with `i <= j` for entries tied by symmetry).
pub fn sample_block_family(spec: &EnsembleSpec) -> Result<BlockFamily> {
    spec.validate()?;
    let m = spec.m;
    let b = spec.resolved_bandwidth();
    let family = StreamFamily::new(spec.seed);
    let draw = |s: usize, i: usize, j: usize| {
        let mut rng = family.stream(entry_key(s, i, j));
        spec.distribution.sample(&mut rng)
    };
    let sqrt2 = core::f64::consts::SQRT_2;
    let blocks = (0..=b)
        .map(|s| {
            let mut a = alloc::vec![0.0; m * m];
            let symmetric = s == 0 || spec.symmetry_class == SymmetryClass::SymmetricBlocks;
            for i in 0..m {
                for j in 0..m {
                    if symmetric && j < i {
                        continue;
                    }
                    let mut v = draw(s, i, j);
                    if i == j && spec.symmetry_class == SymmetryClass::SymmetricBlocks {
                        v *= sqrt2;
                    }
                    a[i * m + j] = v;
                    if symmetric {
                        a[j * m + i] = v;
                    }
                }
            }
            a
        })
        .collect();
    Ok(BlockFamily { m, blocks })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    /// `X_N = T_N / √(2 m b_N)`.
    GueScaled,
    /// `Y_N = T_N / √(2 b_N)`.
    TraceScaled,
}

impl Normalization {
    pub fn factor(self, m: usize, b: usize) -> f64 {
        match self {
            Normalization::Raw => 1.0,
            Normalization::GueScaled => 1.0 / libm::sqrt(2.0 * (m * b) as f64),
            Normalization::TraceScaled => 1.0 / libm::sqrt(2.0 * b as f64),
        }
    }
}

/// An assembled, normalized `mN × mN` block Toeplitz band matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockToeplitzMatrix {
    spec: EnsembleSpec,
    bandwidth: usize,
    normalization: Normalization,
    band: SymmetricBand,
}

impl BlockToeplitzMatrix {
    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    /// Resolved `b_N`.
    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn band(&self) -> &SymmetricBand {
        &self.band
    }

    pub fn dimension(&self) -> usize {
        self.band.dim()
    }

    pub fn entry(&self, p: usize, q: usize) -> f64 {
        self.band.get(p, q)
    }

    pub fn into_band(self) -> SymmetricBand {
        self.band
    }
}

pub fn build_matrix(spec: &EnsembleSpec, normalization: Normalization) -> Result<BlockToeplitzMatrix> {
    build_matrix_with_budget(spec, normalization, DEFAULT_MEMORY_BUDGET)
}

/// Assembles `T_N` (block `(i, j)` is `A_{i-j}`) and applies `normalization`.
pub fn build_matrix_with_budget(
    spec: &EnsembleSpec,
    normalization: Normalization,
    budget: usize,
) -> Result<BlockToeplitzMatrix> {
    spec.validate()?;
    let n = spec.dimension();
    let h = spec.half_bandwidth();
    let required = SymmetricBand::storage_len(n, h).unwrap_or(usize::MAX);
    if required > budget {
        return Err(Error::MemoryBudget { required, budget });
    }
    let family = sample_block_family(spec)?;
    let m = spec.m;
    let b = family.bandwidth();
    let scale = normalization.factor(m, b);
    let mut band = SymmetricBand::zeros(n, h);
    for p in 0..n {
        let (bi, i) = (p / m, p % m);
        let lo = (bi.saturating_sub(b)) * m;
        for q in lo..=p {
            let (bj, j) = (q / m, q % m);
            let s = bi as isize - bj as isize;
            band.set(p, q, scale * family.entry(s, i, j));
        }
    }
    Ok(BlockToeplitzMatrix {
        spec: *spec,
        bandwidth: b,
        normalization,
        band,
    })
}

//! Monte Carlo experiments on block Toeplitz ensembles.
//!
//! Sample `i` at block count `N` is seeded from
//! `(master seed, experiment id, N, i)`, samples run on a bounded rayon pool,
//! and results are gathered back in sample-index order. A report is
//! therefore a function of the config alone, whatever the thread count.

use std::time::Instant;

use rayon::prelude::*;
use tbm_core::rng::{derive_seed, StreamFamily};
use tbm_core::stats::{ks_sorted, mean_se, moments_of};
use tbm_core::{
    build_matrix, eigenvalues_band, eigenvalues_dense, goe_moment, gue_moment, ks_two_sample, mixed_trace_gue,
    DenseSymmetric, DensityModel, EnsembleClass, EntryDistribution, Rational, SolverDiagnostics, TraceWord,
};

use crate::config::{ExperimentConfig, ExperimentKind, ReferenceKind, Statistic};
use crate::error::{LabError, Result};
use crate::report::{
    Check, DiagnosticsSummary, Estimate, ExperimentReport, Histogram, KsSummary, KsTrend, MixedRow, MomentRow, NResult,
    ReferenceInfo, ReferenceValue, Source, Timing, SCHEMA_VERSION,
};

/// Seed-derivation tag of the direct GOE sampler reference.
const DIRECT_SAMPLER_ID: u64 = 4;

/// Relative tolerance of the per-sample trace/Frobenius identity check.
const IDENTITY_TOL: f64 = 1e-9;

pub fn build_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    builder.build().map_err(|e| LabError::Pool(e.to_string()))
}

/// Spectra of `count` independent `m × m` GOE matrices (diagonal variance 2,
/// off-diagonal variance 1), each scaled by `1/√m`, in matrix order.
pub fn direct_goe_spectra(m: usize, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if m == 0 {
        return Err(tbm_core::Error::InvalidArgument("GOE order m must be at least 1").into());
    }
    if m > tbm_core::density::MAX_BLOCK_ORDER {
        return Err(tbm_core::Error::SizeLimit {
            what: "GOE order m",
            value: m,
            max: tbm_core::density::MAX_BLOCK_ORDER,
        }
        .into());
    }
    let family = StreamFamily::new(seed);
    let scale = 1.0 / (m as f64).sqrt();
    (0..count)
        .into_par_iter()
        .map(|c| {
            let mut rng = family.stream(c as u64);
            let mut h = DenseSymmetric::zeros(m);
            for i in 0..m {
                for j in i..m {
                    let v = EntryDistribution::Gaussian.sample(&mut rng);
                    h.set(i, j, if i == j { std::f64::consts::SQRT_2 * v } else { v });
                }
            }
            let s = eigenvalues_dense(&h)?;
            Ok(s.eigenvalues.into_iter().map(|x| x * scale).collect())
        })
        .collect()
}

/// Pooled eigenvalues of [`direct_goe_spectra`].
pub fn sample_direct_goe(m: usize, count: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(direct_goe_spectra(m, count, seed)?.concat())
}

fn rational_value(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn exact(r: Rational) -> ReferenceValue {
    ReferenceValue {
        value: rational_value(r),
        exact: Some(r.to_string()),
        se: None,
        source: Source::Enumeration,
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Histogram counts of ascending `sorted` on `bins` equal cells of `[lo, hi)`,
/// plus the counts below and above.
fn bin_counts(sorted: &[f64], lo: f64, hi: f64, bins: usize) -> (Vec<u64>, u64, u64) {
    let mut counts = vec![0u64; bins];
    let (mut below, mut above) = (0, 0);
    let w = (hi - lo) / bins as f64;
    for &x in sorted {
        if x < lo {
            below += 1;
        } else if x >= hi {
            above += 1;
        } else {
            let b = (((x - lo) / w) as usize).min(bins - 1);
            counts[b] += 1;
        }
    }
    (counts, below, above)
}

/// Reference data shared read-only by all workers.
pub struct Reference {
    info: ReferenceInfo,
    /// Quadrature density, when one was needed.
    model: Option<DensityModel>,
    /// Direct sampler spectra (per matrix) and their sorted pool.
    sampler: Option<(Vec<Vec<f64>>, Vec<f64>)>,
    histogram_density: Option<Vec<f64>>,
}

impl Reference {
    pub fn build(config: &ExperimentConfig) -> Result<Self> {
        let m = config.ensemble.m;
        let class = config.ensemble.class();
        let distribution_wanted = config.wants(&Statistic::Ks) || config.wants(&Statistic::EsdHistogram);
        let direct = config.reference == ReferenceKind::DirectGoeSampler;
        let needs_model = match config.reference {
            ReferenceKind::AnalyticDensity => true,
            // the quadrature density is the secondary GOE reference
            ReferenceKind::DirectGoeSampler => config.wants(&Statistic::Ks),
            ReferenceKind::CombinatorialMoments => distribution_wanted,
        };
        let model = if needs_model {
            Some(DensityModel::new(class, m)?)
        } else {
            None
        };
        let sampler_seed = direct.then(|| derive_seed(&[config.master_seed, DIRECT_SAMPLER_ID, m as u64]));
        let sampler = match sampler_seed {
            Some(seed) => {
                let spectra = direct_goe_spectra(m, config.reference_samples, seed)?;
                let mut pool = spectra.concat();
                pool.sort_by(f64::total_cmp);
                Some((spectra, pool))
            }
            None => None,
        };
        let source = match config.reference {
            ReferenceKind::AnalyticDensity => Source::Quadrature,
            ReferenceKind::CombinatorialMoments => Source::Enumeration,
            ReferenceKind::DirectGoeSampler => Source::DirectSampler,
        };
        let mut reference = Self {
            info: ReferenceInfo {
                source,
                class,
                m,
                quadrature: model.as_ref().map(|md| *md.config()),
                sampler_seed,
                sampler_matrices: direct.then_some(config.reference_samples),
            },
            model,
            sampler,
            histogram_density: None,
        };
        if config.wants(&Statistic::EsdHistogram) {
            reference.histogram_density = Some(reference.bin_densities(config)?);
        }
        Ok(reference)
    }

    pub fn info(&self) -> &ReferenceInfo {
        &self.info
    }

    /// Source of distribution-level comparisons (KS, histogram).
    fn distribution_source(&self) -> Source {
        if self.sampler.is_some() {
            Source::DirectSampler
        } else {
            Source::Quadrature
        }
    }

    fn bin_densities(&self, config: &ExperimentConfig) -> Result<Vec<f64>> {
        let h = config.histogram;
        let w = (h.hi - h.lo) / h.bins as f64;
        if let Some((_, pool)) = &self.sampler {
            let (counts, _, _) = bin_counts(pool, h.lo, h.hi, h.bins);
            let total = pool.len() as f64;
            return Ok(counts.iter().map(|&c| c as f64 / (total * w)).collect());
        }
        let model = self.model.as_ref().expect("quadrature model built for histogram reference");
        Ok((0..h.bins)
            .map(|i| {
                let a = h.lo + i as f64 * w;
                (model.cdf(a + w) - model.cdf(a)) / w
            })
            .collect())
    }

    /// KS distance from an ascending sample to the primary reference.
    fn ks(&self, sorted: &[f64]) -> Result<f64> {
        match (&self.sampler, &self.model) {
            (Some((_, pool)), _) => Ok(ks_two_sample(sorted, pool)?),
            (None, Some(model)) => Ok(ks_sorted(sorted, |x| model.cdf(x))?),
            (None, None) => unreachable!("KS requested without a distribution reference"),
        }
    }

    fn secondary_ks(&self, sorted: &[f64]) -> Result<Option<f64>> {
        match (&self.sampler, &self.model) {
            (Some(_), Some(model)) => Ok(Some(ks_sorted(sorted, |x| model.cdf(x))?)),
            _ => Ok(None),
        }
    }

    /// Reference for `(1/(mN)) E tr X_N^k`.
    pub fn moment(&self, k: usize) -> Result<ReferenceValue> {
        let m = self.info.m;
        match self.info.source {
            Source::Enumeration => {
                let r = match self.info.class {
                    EnsembleClass::Gue => gue_moment(m as u64, k)?,
                    EnsembleClass::Goe => goe_moment(m as u64, k)?,
                };
                Ok(exact(r))
            }
            Source::Quadrature => {
                let model = self.model.as_ref().expect("quadrature model built");
                Ok(ReferenceValue {
                    value: model.moment(k)?,
                    exact: None,
                    se: None,
                    source: Source::Quadrature,
                })
            }
            Source::DirectSampler => {
                let (spectra, _) = self.sampler.as_ref().expect("sampler pool built");
                let per_matrix = spectra
                    .iter()
                    .map(|s| moments_of(s, k).map(|v| v[k - 1]))
                    .collect::<tbm_core::Result<Vec<_>>>()?;
                let est = mean_se(&per_matrix)?;
                Ok(ReferenceValue {
                    value: est.mean,
                    exact: None,
                    se: Some(est.se),
                    source: Source::DirectSampler,
                })
            }
        }
    }

    pub fn mixed(&self, word: &TraceWord) -> Result<ReferenceValue> {
        let v = mixed_trace_gue(self.info.m as u64, word)?;
        Ok(exact(Rational::from_integer(v)))
    }

    pub fn histogram_density(&self) -> Option<&[f64]> {
        self.histogram_density.as_deref()
    }
}

struct SampleOutcome {
    eigenvalues: Vec<f64>,
    diagnostics: SolverDiagnostics,
    identities_hold: bool,
    moments: Vec<f64>,
    mixed: Vec<f64>,
    ks: Option<f64>,
}

/// `(1/N^ν) Π (tr Y^i)^{ν_i}` from a spectrum.
fn mixed_statistic(eigenvalues: &[f64], n: usize, word: &TraceWord) -> f64 {
    word.exponents()
        .iter()
        .enumerate()
        .filter(|(_, &nu)| nu > 0)
        .map(|(i, &nu)| {
            let tr: f64 = eigenvalues.iter().map(|x| x.powi(i as i32 + 1)).sum();
            (tr / n as f64).powi(nu as i32)
        })
        .product()
}

fn run_sample(config: &ExperimentConfig, reference: &Reference, n: usize, i: usize) -> Result<SampleOutcome> {
    let seed = derive_seed(&[config.master_seed, config.experiment.id(), n as u64, i as u64]);
    let spec = config.ensemble.instantiate(n, seed);
    let matrix = build_matrix(&spec, config.experiment.normalization())?;
    let sample = eigenvalues_band(matrix.band())?;
    let dim = spec.dimension();
    let moments = match config.k_max() {
        Some(k) => moments_of(&sample.eigenvalues, k)?,
        None => Vec::new(),
    };
    let mixed = config
        .words()
        .iter()
        .map(|w| mixed_statistic(&sample.eigenvalues, n, w))
        .collect();
    let ks = if config.wants(&Statistic::Ks) {
        Some(reference.ks(&sample.eigenvalues)?)
    } else {
        None
    };
    Ok(SampleOutcome {
        identities_hold: sample.diagnostics.identities_hold(dim, IDENTITY_TOL),
        diagnostics: sample.diagnostics,
        eigenvalues: sample.eigenvalues,
        moments,
        mixed,
        ks,
    })
}

fn z_score(est: Estimate, reference: f64) -> Option<f64> {
    (est.se > 0.0).then(|| (est.mean - reference) / est.se)
}

fn aggregate(config: &ExperimentConfig, reference: &Reference, n: usize, outcomes: &[SampleOutcome]) -> Result<NResult> {
    let spec = config.ensemble.instantiate(n, 0);
    let column = |f: &dyn Fn(&SampleOutcome) -> f64| outcomes.iter().map(f).collect::<Vec<_>>();

    let mut moments = Vec::new();
    for k in 1..=config.k_max().unwrap_or(0) {
        let empirical: Estimate = mean_se(&column(&|o| o.moments[k - 1]))?.into();
        let reference = reference.moment(k)?;
        moments.push(MomentRow {
            k,
            gap: (empirical.mean - reference.value).abs(),
            z: z_score(empirical, reference.value),
            empirical,
            reference,
        });
    }

    let mut mixed_traces = Vec::new();
    for (w, word) in config.words().iter().enumerate() {
        let empirical: Estimate = mean_se(&column(&|o| o.mixed[w]))?.into();
        let reference = reference.mixed(word)?;
        let gap = (empirical.mean - reference.value).abs();
        mixed_traces.push(MixedRow {
            word: word.exponents().to_vec(),
            empirical,
            relative_gap: (reference.value != 0.0).then(|| gap / reference.value.abs()),
            gap,
            reference,
        });
    }

    let wants_pool = config.wants(&Statistic::Ks) || config.wants(&Statistic::EsdHistogram);
    let pool = if wants_pool {
        let mut pool: Vec<f64> = outcomes.iter().flat_map(|o| o.eigenvalues.iter().copied()).collect();
        pool.sort_by(f64::total_cmp);
        pool
    } else {
        Vec::new()
    };

    let ks = if config.wants(&Statistic::Ks) {
        let per = column(&|o| o.ks.expect("per-sample KS computed"));
        Some(KsSummary {
            pooled: reference.ks(&pool)?,
            per_sample: mean_se(&per)?.into(),
            median: median(&per),
            source: reference.distribution_source(),
            secondary_pooled: reference.secondary_ks(&pool)?,
        })
    } else {
        None
    };

    let histogram = match reference.histogram_density() {
        Some(ref_density) => {
            let h = config.histogram;
            let w = (h.hi - h.lo) / h.bins as f64;
            let (counts, below, above) = bin_counts(&pool, h.lo, h.hi, h.bins);
            let total = pool.len() as f64;
            let p: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
            Some(Histogram {
                lo: h.lo,
                hi: h.hi,
                empirical_density: p.iter().map(|p| p / w).collect(),
                se: p.iter().map(|p| (p * (1.0 - p) / total).sqrt() / w).collect(),
                counts,
                reference_density: ref_density.to_vec(),
                source: reference.distribution_source(),
                below: below as f64 / total,
                above: above as f64 / total,
            })
        }
        None => None,
    };

    let diagnostics = DiagnosticsSummary {
        total_iterations: outcomes.iter().map(|o| o.diagnostics.iterations as u64).sum(),
        max_trace_residual: outcomes.iter().map(|o| o.diagnostics.trace_residual).fold(0.0, f64::max),
        max_frobenius_residual: outcomes
            .iter()
            .map(|o| o.diagnostics.frobenius_residual)
            .fold(0.0, f64::max),
        identities_hold: outcomes.iter().all(|o| o.identities_hold),
    };

    Ok(NResult {
        n,
        bandwidth: spec.resolved_bandwidth(),
        dimension: spec.dimension(),
        samples: outcomes.len(),
        moments,
        mixed_traces,
        ks,
        histogram,
        diagnostics,
    })
}

fn ks_trend(results: &[NResult]) -> Option<KsTrend> {
    let medians: Vec<f64> = results.iter().map(|r| r.ks.as_ref().map(|k| k.median)).collect::<Option<_>>()?;
    if medians.is_empty() {
        return None;
    }
    let applicable = medians.len() >= 2;
    Some(KsTrend {
        applicable,
        nonincreasing: applicable.then(|| medians.windows(2).all(|w| w[1] <= w[0])),
        medians,
    })
}

fn checks(config: &ExperimentConfig, results: &[NResult], trend: Option<&KsTrend>, complete: bool) -> Vec<Check> {
    let mut out = Vec::new();
    out.push(Check {
        name: "complete".into(),
        hard: true,
        passed: complete,
        detail: format!("{} of {} block counts finished", results.len(), config.n_values.len()),
    });
    for r in results {
        out.push(Check {
            name: format!("solver_identities_N{}", r.n),
            hard: true,
            passed: r.diagnostics.identities_hold,
            detail: format!(
                "max trace residual {:.3e}, max Frobenius residual {:.3e}",
                r.diagnostics.max_trace_residual, r.diagnostics.max_frobenius_residual
            ),
        });
    }
    if let Some(t) = trend.filter(|t| t.applicable) {
        out.push(Check {
            name: "ks_median_nonincreasing".into(),
            hard: false,
            passed: t.nonincreasing == Some(true),
            detail: format!("medians {:?}", t.medians),
        });
    }
    let Some(last) = results.last().filter(|_| complete) else {
        return out;
    };
    let tol = &config.tolerances;
    if let (Some(max), Some(ks)) = (tol.ks_max, &last.ks) {
        out.push(Check {
            name: format!("ks_pooled_N{}", last.n),
            hard: true,
            passed: ks.pooled <= max,
            detail: format!("pooled KS {:.5} vs limit {max}", ks.pooled),
        });
    }
    for row in &last.moments {
        if let Some(&budget) = tol.bias_budget.get(&row.k) {
            let allowed = 3.0 * row.empirical.se + budget;
            out.push(Check {
                name: format!("moment_k{}_N{}", row.k, last.n),
                hard: true,
                passed: row.gap <= allowed,
                detail: format!(
                    "empirical {:.6} ± {:.6} vs reference {:.6}; gap {:.6}, allowed {:.6}",
                    row.empirical.mean, row.empirical.se, row.reference.value, row.gap, allowed
                ),
            });
        }
    }
    if let Some(rel) = tol.mixed_relative {
        for row in &last.mixed_traces {
            let allowed = 3.0 * row.empirical.se + rel * row.reference.value.abs();
            out.push(Check {
                name: format!("mixed_{:?}_N{}", row.word, last.n),
                hard: true,
                passed: row.gap <= allowed,
                detail: format!(
                    "empirical {:.6} ± {:.6} vs reference {:.6}; gap {:.6}, allowed {:.6}",
                    row.empirical.mean, row.empirical.se, row.reference.value, row.gap, allowed
                ),
            });
        }
    }
    out
}

fn execute(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    let reference = Reference::build(config)?;
    let mut results = Vec::new();
    let mut per_n_seconds = Vec::new();
    let mut failure = None;
    for &n in &config.n_values {
        let t0 = Instant::now();
        let outcomes: Vec<Result<SampleOutcome>> = (0..config.samples)
            .into_par_iter()
            .map(|i| run_sample(config, &reference, n, i))
            .collect();
        let outcomes = match outcomes.into_iter().collect::<Result<Vec<_>>>() {
            Ok(v) => v,
            Err(e) => {
                failure = Some(format!("N={n}: {e}"));
                break;
            }
        };
        results.push(aggregate(config, &reference, n, &outcomes)?);
        per_n_seconds.push(t0.elapsed().as_secs_f64());
    }
    let complete = failure.is_none();
    let trend = ks_trend(&results);
    let checks = checks(config, &results, trend.as_ref(), complete);
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        complete,
        failure,
        reference: reference.info().clone(),
        results,
        ks_trend: trend,
        checks,
        timing: config.record_timing.then(|| Timing {
            total_seconds: started.elapsed().as_secs_f64(),
            per_n_seconds,
        }),
    })
}

/// Runs whichever experiment `config` names on a pool of `config.threads`
/// workers.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    build_pool(config.threads)?.install(|| execute(config))
}

fn run_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<ExperimentReport> {
    if config.experiment != kind {
        return Err(LabError::Config(format!(
            "expected a {kind:?} experiment, got {:?}",
            config.experiment
        )));
    }
    run_experiment(config)
}

/// Spectral distribution against the limiting density (or the direct GOE
/// sampler), with histograms and a KS trend over the `N` ladder.
pub fn run_esd_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::Esd)
}

/// `(1/(mN)) tr X_N^k` against pair-partition sums, quadrature or the sampler.
pub fn run_moment_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::Moments)
}

/// `(1/N^ν) Π (tr Y_N^i)^{ν_i}` against the GUE mixed trace.
pub fn run_mixed_trace_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::MixedTraces)
}

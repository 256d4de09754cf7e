//! Experiment configuration files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use tbm_core::pairing::MAX_WORD_LETTERS;
use tbm_core::stats::MAX_EMPIRICAL_MOMENT;
use tbm_core::{BandwidthSchedule, EnsembleClass, EnsembleSpec, EntryDistribution, Normalization, SymmetryClass, TraceWord};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Esd,
    Moments,
    MixedTraces,
}

impl ExperimentKind {
    /// Enters per-sample seed derivation, so it must never change.
    pub fn id(self) -> u64 {
        match self {
            ExperimentKind::Esd => 1,
            ExperimentKind::Moments => 2,
            ExperimentKind::MixedTraces => 3,
        }
    }

    pub fn normalization(self) -> Normalization {
        match self {
            ExperimentKind::Esd | ExperimentKind::Moments => Normalization::GueScaled,
            ExperimentKind::MixedTraces => Normalization::TraceScaled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Statistic {
    EsdHistogram,
    TraceMoments { k_max: usize },
    MixedTraces { words: Vec<Vec<usize>> },
    Ks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    AnalyticDensity,
    CombinatorialMoments,
    DirectGoeSampler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        Self {
            lo: -4.0,
            hi: 4.0,
            bins: 81,
        }
    }
}

/// Hard-check thresholds, all applied at the largest `N` of the ladder.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Upper bound on the pooled KS distance.
    #[serde(default)]
    pub ks_max: Option<f64>,
    /// Per-order finite-`N` bias budget: moment `k` passes when
    /// `|empirical - reference| <= 3 SE + budget[k]`.
    #[serde(default)]
    pub bias_budget: BTreeMap<usize, f64>,
    /// Mixed traces pass when `|empirical - reference| <= 3 SE + rel |reference|`.
    #[serde(default)]
    pub mixed_relative: Option<f64>,
}

/// Everything about an ensemble except `N` and the seed, which the harness
/// fills in per sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleTemplate {
    pub m: usize,
    pub bandwidth: BandwidthSchedule,
    pub symmetry_class: SymmetryClass,
    #[serde(default)]
    pub distribution: EntryDistribution,
}

impl EnsembleTemplate {
    pub fn instantiate(&self, n: usize, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            n,
            m: self.m,
            bandwidth: self.bandwidth,
            symmetry_class: self.symmetry_class,
            distribution: self.distribution,
            seed,
        }
    }

    pub fn class(&self) -> EnsembleClass {
        match self.symmetry_class {
            SymmetryClass::TransposeCoupled => EnsembleClass::Gue,
            SymmetryClass::SymmetricBlocks => EnsembleClass::Goe,
        }
    }
}

fn default_reference_samples() -> usize {
    20_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub ensemble: EnsembleTemplate,
    pub n_values: Vec<usize>,
    /// Matrices per `N`.
    pub samples: usize,
    pub statistics: Vec<Statistic>,
    pub reference: ReferenceKind,
    #[serde(default)]
    pub histogram: HistogramSpec,
    /// Matrix count for the direct GOE sampler reference.
    #[serde(default = "default_reference_samples")]
    pub reference_samples: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Option<String>,
    pub master_seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Wall-clock timings make reports machine-dependent, so they are opt-in.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn k_max(&self) -> Option<usize> {
        self.statistics.iter().find_map(|s| match s {
            Statistic::TraceMoments { k_max } => Some(*k_max),
            _ => None,
        })
    }

    pub fn words(&self) -> Vec<TraceWord> {
        self.statistics
            .iter()
            .flat_map(|s| match s {
                Statistic::MixedTraces { words } => words.clone(),
                _ => Vec::new(),
            })
            .map(TraceWord::new)
            .collect()
    }

    pub fn wants(&self, stat: &Statistic) -> bool {
        self.statistics
            .iter()
            .any(|s| core::mem::discriminant(s) == core::mem::discriminant(stat))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(LabError::Config(msg.to_owned()));
        if self.samples < 2 {
            return bad("samples must be at least 2 so standard errors exist");
        }
        if self.n_values.is_empty() {
            return bad("n_values must not be empty");
        }
        for &n in &self.n_values {
            self.ensemble.instantiate(n, 0).validate()?;
        }
        if self.statistics.is_empty() {
            return bad("at least one statistic is required");
        }
        if let Some(k) = self.k_max() {
            if k == 0 || k > MAX_EMPIRICAL_MOMENT {
                return bad("trace_moments k_max must lie in 1..=16");
            }
        }
        for word in self.words() {
            let letters = word.letter_count();
            if letters == 0 {
                return bad("mixed-trace words must contain at least one letter");
            }
            if letters > MAX_WORD_LETTERS {
                return Err(LabError::Core(tbm_core::Error::SizeLimit {
                    what: "trace word letter count",
                    value: letters,
                    max: MAX_WORD_LETTERS,
                }));
            }
        }
        let h = self.histogram;
        if h.bins == 0 || !h.lo.is_finite() || !h.hi.is_finite() || h.lo >= h.hi {
            return bad("histogram needs lo < hi and at least one bin");
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1");
        }
        let mixed = self.wants(&Statistic::MixedTraces { words: Vec::new() });
        match self.experiment {
            ExperimentKind::MixedTraces => {
                if !mixed {
                    return bad("a mixed_traces experiment needs a mixed_traces statistic");
                }
                if self.ensemble.symmetry_class != SymmetryClass::TransposeCoupled {
                    return bad("mixed traces are defined for the transpose_coupled class");
                }
                if self.reference != ReferenceKind::CombinatorialMoments {
                    return bad("mixed traces are referenced by enumeration (combinatorial_moments)");
                }
            }
            ExperimentKind::Esd => {
                if mixed {
                    return bad("mixed_traces belongs to a mixed_traces experiment");
                }
                if self.reference == ReferenceKind::CombinatorialMoments {
                    return bad("an ESD experiment needs a distribution reference");
                }
            }
            ExperimentKind::Moments => {
                if mixed {
                    return bad("mixed_traces belongs to a mixed_traces experiment");
                }
                if self.k_max().is_none() {
                    return bad("a moments experiment needs a trace_moments statistic");
                }
            }
        }
        if self.reference == ReferenceKind::DirectGoeSampler {
            if self.ensemble.symmetry_class != SymmetryClass::SymmetricBlocks {
                return bad("the direct GOE sampler only references the symmetric_blocks class");
            }
            if self.reference_samples < 2 {
                return bad("reference_samples must be at least 2");
            }
        }
        Ok(())
    }
}

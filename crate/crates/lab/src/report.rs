//! Experiment reports and their canonical JSON form.
//!
//! Canonical means: object keys sorted, every float written with 17
//! significant digits in exponent form, integers verbatim, two-space
//! indentation, and arrays of scalars kept on one line. Two runs that agree
//! bit-for-bit therefore produce byte-identical files, and loading reverses
//! persisting exactly.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tbm_core::{EnsembleClass, QuadratureConfig};

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Where a reference value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Quadrature,
    Enumeration,
    DirectSampler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl From<tbm_core::stats::MeanSe> for Estimate {
    fn from(v: tbm_core::stats::MeanSe) -> Self {
        Self { mean: v.mean, se: v.se }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValue {
    pub value: f64,
    /// Exact rational, for enumerated values.
    pub exact: Option<String>,
    /// Monte Carlo error, for sampled values.
    pub se: Option<f64>,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceInfo {
    pub source: Source,
    pub class: EnsembleClass,
    pub m: usize,
    pub quadrature: Option<QuadratureConfig>,
    /// Direct sampler seed and matrix count.
    pub sampler_seed: Option<u64>,
    pub sampler_matrices: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub k: usize,
    /// `(1/(mN)) tr X_N^k` over samples.
    pub empirical: Estimate,
    pub reference: ReferenceValue,
    pub gap: f64,
    /// `(empirical - reference) / SE`; absent when the SE vanishes.
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedRow {
    pub word: Vec<usize>,
    pub empirical: Estimate,
    pub reference: ReferenceValue,
    pub gap: f64,
    /// `gap / |reference|`; absent when the reference is zero.
    pub relative_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsSummary {
    /// All eigenvalues at this `N` pooled into one sample.
    pub pooled: f64,
    pub per_sample: Estimate,
    pub median: f64,
    pub source: Source,
    /// Pooled distance to the quadrature density when the primary reference
    /// is the direct sampler.
    pub secondary_pooled: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub empirical_density: Vec<f64>,
    /// Binomial standard error of each empirical density.
    pub se: Vec<f64>,
    pub reference_density: Vec<f64>,
    pub source: Source,
    /// Fractions of pooled eigenvalues below `lo` and at or above `hi`.
    pub below: f64,
    pub above: f64,
}

impl Histogram {
    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let w = (self.hi - self.lo) / self.counts.len() as f64;
        (self.lo + i as f64 * w, self.lo + (i + 1) as f64 * w)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    pub total_iterations: u64,
    pub max_trace_residual: f64,
    pub max_frobenius_residual: f64,
    /// Trace and Frobenius identities within `1e-9` relative for every sample.
    pub identities_hold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NResult {
    pub n: usize,
    pub bandwidth: usize,
    pub dimension: usize,
    pub samples: usize,
    pub moments: Vec<MomentRow>,
    pub mixed_traces: Vec<MixedRow>,
    pub ks: Option<KsSummary>,
    pub histogram: Option<Histogram>,
    pub diagnostics: DiagnosticsSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsTrend {
    /// False for a single-rung ladder.
    pub applicable: bool,
    pub medians: Vec<f64>,
    pub nonincreasing: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Soft checks are reported but never fail a run.
    pub hard: bool,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub per_n_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub complete: bool,
    /// Why the run stopped early, for incomplete reports.
    pub failure: Option<String>,
    pub reference: ReferenceInfo,
    pub results: Vec<NResult>,
    pub ks_trend: Option<KsTrend>,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl ExperimentReport {
    pub fn hard_failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.hard && !c.passed)
    }

    pub fn passed(&self) -> bool {
        self.complete && self.hard_failures().next().is_none()
    }
}

/// Canonical JSON text of any serializable value, without a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0, true);
    Ok(out)
}

/// Single-line canonical JSON, for config echoes in CSV headers.
pub fn to_canonical_json_compact<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0, false);
    Ok(out)
}

fn write_number(out: &mut String, n: &serde_json::Number) {
    if n.is_f64() {
        let x = n.as_f64().unwrap_or(f64::NAN);
        let _ = write!(out, "{x:.16e}");
    } else {
        let _ = write!(out, "{n}");
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn indent(out: &mut String, level: usize) {
    out.push('\n');
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(out: &mut String, v: &Value, level: usize, pretty: bool) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            let inline = !pretty || items.iter().all(is_scalar);
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                    if inline && pretty {
                        out.push(' ');
                    }
                }
                if !inline {
                    indent(out, level + 1);
                }
                write_value(out, item, level + 1, pretty);
            }
            if !inline && !items.is_empty() {
                indent(out, level);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            // serde_json's default map is a BTreeMap, so iteration is sorted
            for (i, (key, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                if pretty {
                    indent(out, level + 1);
                }
                out.push_str(&Value::String(key.clone()).to_string());
                out.push(':');
                if pretty {
                    out.push(' ');
                }
                write_value(out, item, level + 1, pretty);
            }
            if pretty && !map.is_empty() {
                indent(out, level);
            }
            out.push('}');
        }
    }
}

pub fn persist_report(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut text = to_canonical_json(report)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| LabError::io(path, e))
}

pub fn parse_report(text: &str) -> Result<ExperimentReport> {
    let v: Value = serde_json::from_str(text)?;
    let found = v.get("schema_version");
    if found.and_then(Value::as_u64) != Some(SCHEMA_VERSION as u64) {
        return Err(LabError::Schema {
            expected: SCHEMA_VERSION,
            found: found.map_or_else(|| "nothing".to_owned(), Value::to_string),
        });
    }
    Ok(serde_json::from_value(v)?)
}

pub fn load_report(path: &Path) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse_report(&text)
}

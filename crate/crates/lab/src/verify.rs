//! Recomputes the reference values stored in a report and diffs them.

use tbm_core::TraceWord;

use crate::error::Result;
use crate::harness::{build_pool, Reference};
use crate::report::{ExperimentReport, ReferenceValue};

/// Relative agreement required between a stored and a recomputed value.
pub const VERIFY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub location: String,
    pub recorded: String,
    pub recomputed: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Verification {
    pub checked: usize,
    pub discrepancies: Vec<Discrepancy>,
}

impl Verification {
    pub fn clean(&self) -> bool {
        self.discrepancies.is_empty()
    }

    fn compare_f64(&mut self, location: String, recorded: f64, recomputed: f64) {
        self.checked += 1;
        if (recorded - recomputed).abs() > VERIFY_TOL * recorded.abs().max(1.0) {
            self.discrepancies.push(Discrepancy {
                location,
                recorded: format!("{recorded:.17e}"),
                recomputed: format!("{recomputed:.17e}"),
            });
        }
    }

    fn compare_reference(&mut self, location: String, recorded: &ReferenceValue, recomputed: &ReferenceValue) {
        if recorded.source != recomputed.source || recorded.exact != recomputed.exact {
            self.checked += 1;
            self.discrepancies.push(Discrepancy {
                location: location.clone(),
                recorded: format!("{:?} {:?}", recorded.source, recorded.exact),
                recomputed: format!("{:?} {:?}", recomputed.source, recomputed.exact),
            });
        }
        self.compare_f64(location.clone(), recorded.value, recomputed.value);
        if let (Some(a), Some(b)) = (recorded.se, recomputed.se) {
            self.compare_f64(format!("{location}.se"), a, b);
        }
    }
}

/// Rebuilds the reference from the echoed config and compares every moment,
/// mixed-trace and histogram reference value in `report`.
pub fn verify_report(report: &ExperimentReport) -> Result<Verification> {
    let config = &report.config;
    config.validate()?;
    let reference = build_pool(config.threads)?.install(|| Reference::build(config))?;
    let mut v = Verification::default();
    if reference.info() != &report.reference {
        v.checked += 1;
        v.discrepancies.push(Discrepancy {
            location: "reference".into(),
            recorded: format!("{:?}", report.reference),
            recomputed: format!("{:?}", reference.info()),
        });
    }
    for r in &report.results {
        for row in &r.moments {
            let loc = format!("N={} moment k={}", r.n, row.k);
            v.compare_reference(loc, &row.reference, &reference.moment(row.k)?);
        }
        for row in &r.mixed_traces {
            let loc = format!("N={} mixed word {:?}", r.n, row.word);
            v.compare_reference(loc, &row.reference, &reference.mixed(&TraceWord::new(row.word.clone()))?);
        }
        if let Some(h) = &r.histogram {
            let fresh = reference.histogram_density().unwrap_or(&[]);
            if fresh.len() != h.reference_density.len() {
                v.checked += 1;
                v.discrepancies.push(Discrepancy {
                    location: format!("N={} histogram bins", r.n),
                    recorded: h.reference_density.len().to_string(),
                    recomputed: fresh.len().to_string(),
                });
                continue;
            }
            for (i, (&a, &b)) in h.reference_density.iter().zip(fresh).enumerate() {
                v.compare_f64(format!("N={} histogram bin {i}", r.n), a, b);
            }
        }
    }
    Ok(v)
}

use tbm_core::stats::{mean_se, moments_of};
use tbm_core::{BandwidthSchedule, EntryDistribution, SymmetryClass};
use tbm_lab::config::{EnsembleTemplate, HistogramSpec, Tolerances};
use tbm_lab::harness::direct_goe_spectra;
use tbm_lab::report::{parse_report, to_canonical_json, Source};
use tbm_lab::{
    load_report, persist_report, run_esd_experiment, run_mixed_trace_experiment, run_moment_experiment,
    sample_direct_goe, verify_report, ExperimentConfig, ExperimentKind, LabError, ReferenceKind, Statistic,
};

fn config(kind: ExperimentKind, class: SymmetryClass, reference: ReferenceKind) -> ExperimentConfig {
    ExperimentConfig {
        experiment: kind,
        ensemble: EnsembleTemplate {
            m: 2,
            bandwidth: BandwidthSchedule::PowerLaw(0.7),
            symmetry_class: class,
            distribution: EntryDistribution::Gaussian,
        },
        n_values: vec![20],
        samples: 6,
        statistics: vec![Statistic::TraceMoments { k_max: 4 }],
        reference,
        histogram: HistogramSpec::default(),
        reference_samples: 500,
        tolerances: Tolerances::default(),
        output: None,
        master_seed: 99,
        threads: Some(2),
        record_timing: false,
    }
}

#[test]
fn direct_goe_m1_is_normal_with_variance_two() {
    let xs = sample_direct_goe(1, 100_000, 3).unwrap();
    let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let est = mean_se(&sq).unwrap();
    assert!((est.mean - 2.0).abs() <= 3.0 * est.se, "{est:?}");
    let odd = mean_se(&xs.iter().map(|x| x * x * x).collect::<Vec<_>>()).unwrap();
    assert!(odd.mean.abs() <= 3.0 * odd.se);
}

#[test]
fn direct_goe_m2_second_moment() {
    let spectra = direct_goe_spectra(2, 100_000, 4).unwrap();
    let second: Vec<f64> = spectra.iter().map(|s| moments_of(s, 2).unwrap()[1]).collect();
    let est = mean_se(&second).unwrap();
    assert!((est.mean - 1.5).abs() <= 3.0 * est.se, "{est:?}");
    let first: Vec<f64> = spectra.iter().map(|s| moments_of(s, 1).unwrap()[0]).collect();
    let est = mean_se(&first).unwrap();
    assert!(est.mean.abs() <= 3.0 * est.se);
}

#[test]
fn report_round_trips_through_canonical_json() {
    let mut c = config(ExperimentKind::Esd, SymmetryClass::SymmetricBlocks, ReferenceKind::DirectGoeSampler);
    c.statistics = vec![Statistic::EsdHistogram, Statistic::Ks, Statistic::TraceMoments { k_max: 3 }];
    let report = run_esd_experiment(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    persist_report(&report, &path).unwrap();
    let back = load_report(&path).unwrap();
    assert_eq!(back, report);
    assert_eq!(to_canonical_json(&back).unwrap() + "\n", std::fs::read_to_string(&path).unwrap());
    // the direct sampler is primary, the quadrature density secondary
    let ks = report.results[0].ks.as_ref().unwrap();
    assert_eq!(ks.source, Source::DirectSampler);
    assert!(ks.secondary_pooled.is_some());
    assert!(report.results[0].moments[0].reference.se.is_some());
    assert!(verify_report(&report).unwrap().clean());
}

#[test]
fn single_rung_ladder_marks_trend_not_applicable() {
    let mut c = config(ExperimentKind::Esd, SymmetryClass::TransposeCoupled, ReferenceKind::AnalyticDensity);
    c.statistics = vec![Statistic::Ks];
    let report = run_esd_experiment(&c).unwrap();
    let trend = report.ks_trend.unwrap();
    assert!(!trend.applicable);
    assert_eq!(trend.nonincreasing, None);
    assert!(report.timing.is_none());
}

#[test]
fn moment_experiment_references_by_class() {
    let gue = run_moment_experiment(&config(
        ExperimentKind::Moments,
        SymmetryClass::TransposeCoupled,
        ReferenceKind::CombinatorialMoments,
    ))
    .unwrap();
    let rows = &gue.results[0].moments;
    assert_eq!(rows[3].reference.exact.as_deref(), Some("9/4"));
    assert_eq!(rows[0].reference.exact.as_deref(), Some("0"));
    assert_eq!(rows[3].reference.source, Source::Enumeration);
    let goe = run_moment_experiment(&config(
        ExperimentKind::Moments,
        SymmetryClass::SymmetricBlocks,
        ReferenceKind::CombinatorialMoments,
    ))
    .unwrap();
    assert_eq!(goe.results[0].moments[1].reference.exact.as_deref(), Some("3/2"));
    // odd moments vanish in expectation
    for row in gue.results[0].moments.iter().step_by(2) {
        assert!(row.gap <= 4.0 * row.empirical.se + 1e-12, "{row:?}");
    }
}

#[test]
fn kind_mismatch_and_invalid_config_are_rejected() {
    let c = config(ExperimentKind::Moments, SymmetryClass::TransposeCoupled, ReferenceKind::CombinatorialMoments);
    assert!(matches!(run_esd_experiment(&c), Err(LabError::Config(_))));
    let mut c = c;
    c.samples = 1;
    assert_eq!(run_moment_experiment(&c).unwrap_err().exit_code(), 2);
}

/// For the one-factor-squared word the trace statistic collapses:
/// `tr Y_N = N tr A_0 / √(2 b)`, so `(1/N²)(tr Y_N)² = (tr A_0)² / (2b)`,
/// whose mean is `m / (2b)`, not the GUE value `m`.
#[test]
fn squared_trace_statistic_tracks_m_over_2b() {
    let mut c = config(
        ExperimentKind::MixedTraces,
        SymmetryClass::TransposeCoupled,
        ReferenceKind::CombinatorialMoments,
    );
    c.ensemble.m = 3;
    c.ensemble.bandwidth = BandwidthSchedule::Fixed(5);
    c.n_values = vec![12];
    c.samples = 400;
    c.statistics = vec![Statistic::MixedTraces { words: vec![vec![2]] }];
    let report = run_mixed_trace_experiment(&c).unwrap();
    let row = &report.results[0].mixed_traces[0];
    assert_eq!(row.reference.exact.as_deref(), Some("3"));
    let predicted = 3.0 / 10.0;
    assert!((row.empirical.mean - predicted).abs() <= 4.0 * row.empirical.se, "{row:?}");
}

#[test]
fn verify_flags_a_tampered_reference() {
    let c = config(ExperimentKind::Moments, SymmetryClass::TransposeCoupled, ReferenceKind::CombinatorialMoments);
    let mut report = run_moment_experiment(&c).unwrap();
    report.results[0].moments[3].reference.value = 2.3;
    let v = verify_report(&report).unwrap();
    assert_eq!(v.discrepancies.len(), 1);
    assert!(v.discrepancies[0].location.contains("k=4"));
}

#[test]
fn corrupted_and_foreign_reports_are_schema_errors() {
    assert_eq!(parse_report("{ not json").unwrap_err().exit_code(), 5);
    let err = parse_report(r#"{"schema_version": 0, "results": []}"#).unwrap_err();
    assert!(matches!(err, LabError::Schema { expected: 1, .. }));
    assert_eq!(parse_report(r#"{"schema_version": 1}"#).unwrap_err().exit_code(), 5);
}

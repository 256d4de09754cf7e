use proptest::prelude::*;
use tbm_core::rng::{derive_seed, entry_key, StreamFamily};
use tbm_core::{
    build_matrix, build_matrix_with_budget, eigenvalues_band, eigenvalues_dense, entry_distribution_moments,
    sample_block_family, BandwidthSchedule, EnsembleSpec, EntryDistribution, Error, Normalization, SymmetryClass,
};

const DISTS: [EntryDistribution; 3] = [
    EntryDistribution::Gaussian,
    EntryDistribution::Rademacher,
    EntryDistribution::UniformScaled,
];

#[test]
fn entry_draws_have_unit_variance_and_stated_moments() {
    let n = 100_000;
    for dist in DISTS {
        let family = StreamFamily::new(derive_seed(&[7, dist as u64]));
        let xs: Vec<f64> = (0..n).map(|k| dist.sample(&mut family.stream(k))).collect();
        for k in 1..=4 {
            let emp = xs.iter().map(|x| x.powi(k as i32)).sum::<f64>() / n as f64;
            let exact = entry_distribution_moments(dist, k).unwrap();
            // 5 standard errors with a crude bound on the k-th moment's variance
            let sd = (entry_distribution_moments(dist, 2 * k).unwrap() - exact * exact).sqrt();
            assert!((emp - exact).abs() < 5.0 * sd / (n as f64).sqrt() + 1e-12, "{dist:?} k={k}: {emp}");
        }
    }
}

#[test]
fn distinct_streams_are_uncorrelated() {
    let n = 100_000u64;
    let family = StreamFamily::new(11);
    let mut cross = 0.0;
    for k in 0..n {
        let a = EntryDistribution::Gaussian.sample(&mut family.stream(entry_key(0, 0, 0) ^ (k << 40)));
        let b = EntryDistribution::Gaussian.sample(&mut family.stream(entry_key(1, 0, 1) ^ (k << 40)));
        cross += a * b;
    }
    assert!((cross / n as f64).abs() < 5.0 / (n as f64).sqrt());
}

#[test]
fn block_entries_have_class_variances() {
    // pool entries of many independent block families
    let m = 3;
    let reps = 4000;
    let mut diag = [0.0f64; 2];
    let mut off = [0.0f64; 2];
    for (c, class) in [SymmetryClass::TransposeCoupled, SymmetryClass::SymmetricBlocks].into_iter().enumerate() {
        for r in 0..reps {
            let spec = EnsembleSpec {
                n: 4,
                m,
                bandwidth: BandwidthSchedule::Fixed(2),
                symmetry_class: class,
                distribution: EntryDistribution::Gaussian,
                seed: derive_seed(&[c as u64, r]),
            };
            let fam = sample_block_family(&spec).unwrap();
            for i in 0..m {
                diag[c] += fam.entry(1, i, i).powi(2);
                for j in 0..m {
                    if i != j {
                        off[c] += fam.entry(1, i, j).powi(2);
                    }
                }
            }
        }
    }
    let nd = (reps * m as u64) as f64;
    let no = (reps * (m * m - m) as u64) as f64;
    assert!((diag[0] / nd - 1.0).abs() < 0.06);
    assert!((off[0] / no - 1.0).abs() < 0.05);
    assert!((diag[1] / nd - 2.0).abs() < 0.12);
    assert!((off[1] / no - 1.0).abs() < 0.05);
}

#[test]
fn memory_budget_is_checked_before_allocation() {
    let spec = EnsembleSpec {
        n: 1000,
        m: 4,
        bandwidth: BandwidthSchedule::PowerLaw(0.5),
        symmetry_class: SymmetryClass::TransposeCoupled,
        distribution: EntryDistribution::Rademacher,
        seed: 1,
    };
    assert!(matches!(
        build_matrix_with_budget(&spec, Normalization::Raw, 1000),
        Err(Error::MemoryBudget { .. })
    ));
}

fn arb_spec() -> impl Strategy<Value = EnsembleSpec> {
    (2usize..12, 1usize..4, 1usize..6, any::<bool>(), 0usize..3, any::<u64>()).prop_map(|(n, m, b, sym, d, seed)| {
        EnsembleSpec {
            n,
            m,
            bandwidth: BandwidthSchedule::Fixed(b),
            symmetry_class: if sym { SymmetryClass::SymmetricBlocks } else { SymmetryClass::TransposeCoupled },
            distribution: DISTS[d],
            seed,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrices_are_block_toeplitz_and_banded(spec in arb_spec()) {
        let t = build_matrix(&spec, Normalization::Raw).unwrap();
        let fam = sample_block_family(&spec).unwrap();
        let (m, b) = (spec.m, t.bandwidth());
        let dense = t.band().to_dense();
        for p in 0..spec.dimension() {
            for q in 0..spec.dimension() {
                let s = (p / m) as isize - (q / m) as isize;
                let want = if s.unsigned_abs() > b { 0.0 } else { fam.entry(s, p % m, q % m) };
                prop_assert_eq!(dense.get(p, q), want);
                prop_assert_eq!(dense.get(p, q), dense.get(q, p));
            }
        }
    }

    #[test]
    fn same_seed_same_matrix(spec in arb_spec()) {
        let a = build_matrix(&spec, Normalization::GueScaled).unwrap();
        let b = build_matrix(&spec, Normalization::GueScaled).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn band_and_dense_solvers_agree(spec in arb_spec()) {
        let t = build_matrix(&spec, Normalization::GueScaled).unwrap();
        let banded = eigenvalues_band(t.band()).unwrap();
        let dense = eigenvalues_dense(&t.band().to_dense()).unwrap();
        let scale = t.band().max_abs().max(1.0) * spec.dimension() as f64;
        for (x, y) in banded.eigenvalues.iter().zip(&dense.eigenvalues) {
            prop_assert!((x - y).abs() <= 1e-11 * scale);
        }
        prop_assert!(banded.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(banded.diagnostics.identities_hold(spec.dimension(), 1e-10));
    }

    #[test]
    fn resolved_bandwidth_in_range(n in 2usize..100_000, a in 0.01f64..0.99) {
        let b = BandwidthSchedule::PowerLaw(a).resolve(n);
        prop_assert!(b >= 1 && b < n);
    }
}

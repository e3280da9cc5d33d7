use bvm_core::comparison::{
    area_metric, divergence, ecdf, fraction_within, max_abs_error, mean_abs_error,
    pooled_histograms, ComparisonFnSpec, DivergenceKind,
};
use bvm_core::{BinnedPdf, Value};
use proptest::prelude::*;

fn paired_paths() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(-50.0..50.0f64, n),
            prop::collection::vec(-50.0..50.0f64, n),
        )
    })
}

fn positive_pdf(bins: usize) -> impl Strategy<Value = BinnedPdf> {
    prop::collection::vec(0.01..1.0f64, bins).prop_map(|w| {
        let total: f64 = w.iter().sum();
        BinnedPdf::from_probabilities(w.iter().map(|x| x / total).collect()).unwrap()
    })
}

fn pdf_pair() -> impl Strategy<Value = (BinnedPdf, BinnedPdf)> {
    (2usize..16).prop_flat_map(|k| (positive_pdf(k), positive_pdf(k)))
}

const KINDS: [DivergenceKind; 4] = [
    DivergenceKind::Kl,
    DivergenceKind::SymKl,
    DivergenceKind::Js,
    DivergenceKind::Hellinger,
];

fn scalar(v: Value) -> f64 {
    v.as_scalar().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn path_comparisons_are_nonnegative_and_zero_on_equal((a, b) in paired_paths()) {
        let (va, vb) = (Value::Path(a.clone()), Value::Path(b.clone()));
        for spec in [ComparisonFnSpec::MeanAbsError, ComparisonFnSpec::MaxAbsError] {
            prop_assert!(scalar(spec.apply(&va, &vb).unwrap()) >= 0.0);
            prop_assert_eq!(scalar(spec.apply(&va, &va).unwrap()), 0.0);
        }
    }

    #[test]
    fn declared_symmetric_scalar_functions_commute(a in -1e3..1e3f64, b in -1e3..1e3f64) {
        for spec in [ComparisonFnSpec::AbsDiff, ComparisonFnSpec::SqDiff] {
            prop_assert!(spec.is_symmetric());
            let x = scalar(spec.apply(&Value::Scalar(a), &Value::Scalar(b)).unwrap());
            let y = scalar(spec.apply(&Value::Scalar(b), &Value::Scalar(a)).unwrap());
            prop_assert!(x >= 0.0);
            prop_assert_eq!(x, y);
        }
    }

    #[test]
    fn area_metric_is_symmetric((a, b) in paired_paths()) {
        let (fa, fb) = (ecdf(&a).unwrap(), ecdf(&b).unwrap());
        let spec = ComparisonFnSpec::AreaMetric;
        prop_assert!(spec.is_symmetric());
        let x = area_metric(&fa, &fb);
        let y = area_metric(&fb, &fa);
        prop_assert!(x >= 0.0);
        prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x));
        prop_assert_eq!(area_metric(&fa, &fa), 0.0);
    }

    #[test]
    fn divergences_are_nonnegative_and_zero_on_equal((p, q) in pdf_pair()) {
        for kind in KINDS {
            let d = divergence(kind, &p, &q).unwrap();
            prop_assert!(d >= 0.0, "{:?} gave {}", kind, d);
            prop_assert!(divergence(kind, &p, &p).unwrap().abs() <= 1e-12);
        }
        prop_assert!(divergence(DivergenceKind::Js, &p, &q).unwrap() <= std::f64::consts::LN_2 + 1e-12);
    }

    #[test]
    fn symmetric_divergences_commute((p, q) in pdf_pair()) {
        for kind in [DivergenceKind::SymKl, DivergenceKind::Js, DivergenceKind::Hellinger] {
            prop_assert!(kind.spec().is_symmetric());
            let x = divergence(kind, &p, &q).unwrap();
            let y = divergence(kind, &q, &p).unwrap();
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x));
        }
    }

    #[test]
    fn histograms_from_samples_share_edges_and_normalize((a, b) in paired_paths(), bins in 1usize..20) {
        let (p, q) = pooled_histograms(&a, &b, bins).unwrap();
        prop_assert_eq!(p.edges(), q.edges());
        for h in [&p, &q] {
            prop_assert!(h.masses().iter().all(|&m| m >= 0.0));
            prop_assert!((h.masses().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn fraction_within_is_monotone_in_epsilon((a, b) in paired_paths(), e1 in 0.0..60.0f64, de in 0.0..60.0f64) {
        let lo = fraction_within(&a, &b, e1).unwrap();
        let hi = fraction_within(&a, &b, e1 + de).unwrap();
        prop_assert!(lo <= hi);
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
    }

    #[test]
    fn mean_error_never_exceeds_max_error((a, b) in paired_paths()) {
        let mae = mean_abs_error(&a, &b).unwrap();
        let max = max_abs_error(&a, &b).unwrap();
        prop_assert!(mae <= max * (1.0 + 1e-12));
    }
}

/// Sorted-sample mean absolute difference, the 1-D Wasserstein distance for
/// equal sample counts.
fn sorted_mean_abs_difference(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

#[test]
fn area_metric_matches_wasserstein_identity_on_100_fixtures() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for fixture in 0..100 {
        let n = rng.random_range(1..200);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..15.0)).collect();
        let area = area_metric(&ecdf(&a).unwrap(), &ecdf(&b).unwrap());
        let w = sorted_mean_abs_difference(&a, &b);
        assert!(
            (area - w).abs() <= 1e-10 * (1.0 + w),
            "fixture {fixture}: area {area} vs sorted difference {w}"
        );
    }
}

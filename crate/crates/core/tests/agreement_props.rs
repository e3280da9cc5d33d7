use bvm_core::agreement::{gamma_epsilon_eval, soft_kernel, AgreementRule, Tolerance};
use bvm_core::comparison::ComparisonFnSpec;
use bvm_core::Value;
use proptest::prelude::*;

fn scalar_rule() -> impl Strategy<Value = AgreementRule> {
    let leaf = prop_oneof![
        (0.0..5.0f64).prop_map(|e| AgreementRule::threshold(ComparisonFnSpec::AbsDiff, e)),
        (-3.0..3.0f64, 0.0..3.0f64).prop_map(|(lo, w)| AgreementRule::Interval {
            comparison: ComparisonFnSpec::Difference,
            lo,
            hi: lo + w,
        }),
        (0.0..2.0f64, 0.1..5.0f64)
            .prop_map(|(s, r)| AgreementRule::soft_exponential(ComparisonFnSpec::AbsDiff, s, r)),
        Just(AgreementRule::AlwaysTrue {}),
        Just(AgreementRule::AlwaysFalse {}),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(AgreementRule::and),
            prop::collection::vec(inner, 1..3).prop_map(AgreementRule::or),
        ]
    })
}

fn boolean_rule() -> impl Strategy<Value = AgreementRule> {
    scalar_rule().prop_filter("boolean rules only", |r| r.is_boolean())
}

fn k(rule: &AgreementRule, a: f64, b: f64) -> f64 {
    rule.evaluate_kernel(&Value::Scalar(a), &Value::Scalar(b)).unwrap()
}

fn paths() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..30).prop_flat_map(|n| {
        (
            prop::collection::vec(-2.0..2.0f64, n),
            prop::collection::vec(-2.0..2.0f64, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn de_morgan_holds_pointwise(a in boolean_rule(), b in boolean_rule(), x in -5.0..5.0f64, y in -5.0..5.0f64) {
        let lhs = AgreementRule::not(AgreementRule::and(vec![a.clone(), b.clone()]));
        let rhs = AgreementRule::or(vec![AgreementRule::not(a), AgreementRule::not(b)]);
        prop_assert_eq!(k(&lhs, x, y), k(&rhs, x, y));
    }

    #[test]
    fn kernels_are_bounded(rule in scalar_rule(), x in -5.0..5.0f64, y in -5.0..5.0f64) {
        let v = k(&rule, x, y);
        prop_assert!((0.0..=1.0).contains(&v));
        if rule.is_boolean() {
            prop_assert!(v == 0.0 || v == 1.0);
        }
    }

    #[test]
    fn boolean_connectives_match_logic(a in boolean_rule(), b in boolean_rule(), x in -5.0..5.0f64, y in -5.0..5.0f64) {
        let (ka, kb) = (k(&a, x, y) == 1.0, k(&b, x, y) == 1.0);
        let and = AgreementRule::and(vec![a.clone(), b.clone()]);
        let or = AgreementRule::or(vec![a, b]);
        prop_assert_eq!(k(&and, x, y) == 1.0, ka && kb);
        prop_assert_eq!(k(&or, x, y) == 1.0, ka || kb);
    }

    #[test]
    fn threshold_is_monotone_in_epsilon(e1 in 0.0..5.0f64, de in 0.0..5.0f64, x in -5.0..5.0f64, y in -5.0..5.0f64) {
        let lo = AgreementRule::threshold(ComparisonFnSpec::AbsDiff, e1);
        let hi = AgreementRule::threshold(ComparisonFnSpec::AbsDiff, e1 + de);
        prop_assert!(k(&lo, x, y) <= k(&hi, x, y));
    }

    #[test]
    fn soft_kernel_is_continuous_and_decreasing(shift in 0.0..3.0f64, rate in 0.01..20.0f64, f in 0.0..10.0f64, df in 0.0..1.0f64) {
        prop_assert_eq!(soft_kernel(shift, shift, rate), 1.0);
        prop_assert!(1.0 - soft_kernel(shift + 1e-12, shift, rate) <= rate * 1e-11);
        prop_assert!(soft_kernel(f + df, shift, rate) <= soft_kernel(f, shift, rate));
    }

    #[test]
    fn gamma_epsilon_is_monotone(
        (yhat, y) in paths(),
        g1 in 0.0..1.0f64, dg in 0.0..0.5f64,
        e1 in 0.0..2.0f64, de in 0.0..2.0f64,
        m in 1.0..6.0f64,
    ) {
        let g2 = (g1 + dg).min(1.0);
        let eval = |g: f64, e: f64| gamma_epsilon_eval(g, &Tolerance::Scalar(e), m, &yhat, &y).unwrap();
        // nondecreasing in ε
        prop_assert!(!eval(g1, e1) || eval(g1, e1 + de));
        // nonincreasing in γ
        prop_assert!(!eval(g2, e1) || eval(g1, e1));
    }
}

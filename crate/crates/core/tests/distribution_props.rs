use bvm_core::distributions::{confidence_interval, Distribution};
use bvm_core::Value;
use proptest::prelude::*;
use rayon::prelude::*;

fn any_dist() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        (-5.0..5.0f64, 0.01..5.0f64).prop_map(|(m, s)| Distribution::normal(m, s).unwrap()),
        (-5.0..5.0f64, 0.5..50.0f64, 0.01..5.0f64)
            .prop_map(|(l, v, s)| Distribution::student_t(l, v, s).unwrap()),
        (0.1..5.0f64, -2.0..2.0f64)
            .prop_map(|(r, s)| Distribution::shifted_exponential(r, s).unwrap()),
        prop::collection::vec(0.0..1.0f64, 2..4).prop_map(|m| {
            Distribution::independent_normals(&m, &vec![0.5; m.len()]).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn samples_are_prefix_stable(d in any_dist(), seed in any::<u64>(), k in 0usize..50, extra in 0usize..50) {
        let short = d.sample(seed, k);
        let long = d.sample(seed, k + extra);
        prop_assert_eq!(&long[..k], &short[..]);
        prop_assert_eq!(d.sample(seed, k), short);
    }

    #[test]
    fn parallel_draws_match_sequential(d in any_dist(), seed in any::<u64>()) {
        let seq = d.sample(seed, 200);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
        let par: Vec<Value> = pool.install(|| {
            (0..200u64).into_par_iter().map(|k| d.draw(seed, 0, k)).collect()
        });
        prop_assert_eq!(seq, par);
    }
}

#[test]
fn central_intervals_contain_their_level() {
    for d in [
        Distribution::normal(1.0, 2.0).unwrap(),
        Distribution::student_t(0.0, 3.0, 1.5).unwrap(),
        Distribution::student_t(-1.0, 10.0, 1.75).unwrap(),
    ] {
        let region = confidence_interval(&d, 0.95).unwrap();
        let xs = d.sample_scalars(17, 0, 100_000).unwrap();
        let inside = xs.iter().filter(|&&x| region.contains_scalar(x)).count() as f64 / 1e5;
        assert!((inside - 0.95).abs() <= 0.01, "{} covers {inside}", d.name());
    }
}

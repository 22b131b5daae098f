use ardm::{dpe1, ml_fixed_threshold, pe_given_0, pe_given_1, poisson_pmf};
use proptest::prelude::*;

proptest! {
    #[test]
    fn error_halves_are_complementary(x in 0.0f64..200.0, t in 0.5f64..120.0, lambda in 0.1f64..40.0) {
        let s = pe_given_0(x, t, lambda).unwrap() + pe_given_1(x, t, lambda).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-13);
    }

    #[test]
    fn derivative_matches_finite_difference(x in 0.0f64..120.0, t in 2.0f64..80.0, lambda in 1.0f64..30.0) {
        let h = 1e-5;
        let fd = (pe_given_1(x + h, t, lambda).unwrap() - pe_given_1(x, t, lambda).unwrap()) / h;
        let d = dpe1(x + h / 2.0, t, lambda).unwrap();
        prop_assert!((fd - d).abs() < 1e-7 + 1e-5 * d.abs(), "fd {fd} d {d}");
    }

    #[test]
    fn miss_probability_is_convex_past_the_mode(t in 5.0f64..60.0, lambda in 1.0f64..20.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let n = t.ceil();
        let start = (n - 1.0 - lambda).max(0.0);
        let (x, y) = (start + 80.0 * a, start + 80.0 * b);
        let f = |v: f64| pe_given_1(v, t, lambda).unwrap();
        let mid = f((x + y) / 2.0);
        prop_assert!(mid <= (f(x) + f(y)) / 2.0 + 1e-15);
    }

    #[test]
    fn ml_threshold_lies_between_hypotheses(m in 0.5f64..500.0, lambda in 0.01f64..100.0) {
        let t = ml_fixed_threshold(m, lambda).unwrap();
        prop_assert!(lambda < t && t < m + lambda);
    }

    #[test]
    fn pmf_is_a_distribution(mean in 0.01f64..400.0) {
        let hi = (mean + 20.0 * mean.sqrt() + 40.0) as u64;
        let s: f64 = (0..=hi).map(|k| poisson_pmf(k, mean).unwrap()).sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }
}

#[test]
fn reference_values() {
    // P(Y >= 35 | 15) and its complement, checked against an external implementation
    let p0 = pe_given_0(0.0, 34.11, 15.0).unwrap();
    assert!((p0 - 7.29779568063e-6).abs() < 1e-15);
    assert!((pe_given_1(0.0, 34.11, 15.0).unwrap() - 0.999992702204319).abs() < 1e-13);
    assert!(pe_given_1(-1.0, 34.0, 15.0).is_err());
    assert!(ml_fixed_threshold(50.0, 0.0).is_err());
}

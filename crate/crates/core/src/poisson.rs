//! Poisson reception mathematics.
//!
//! Received counts are integers while thresholds are real. A count `y` decodes
//! to "1" when `y >= threshold`, i.e. when `y >= ceil(threshold)`; the
//! integer `ceil(threshold)` is called the *decision count* below.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Relative size below which tail terms no longer change a sum.
const TAIL_EPS: f64 = 1e-18;

/// Integer form of a real threshold: decode "1" iff `y >= decision_count(t)`.
pub fn decision_count(threshold: f64) -> u64 {
    threshold.ceil().max(0.0) as u64
}

/// `ln pmf(k, mean)` by Loader's saddle-point form, which keeps full relative
/// precision for large `k` where `k ln(mean) - ln k!` would cancel badly.
pub fn ln_poisson_pmf(k: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if k == 0 {
        return -mean;
    }
    let x = k as f64;
    -stirling_error(x) - deviance(x, mean) - 0.5 * (std::f64::consts::TAU * x).ln()
}

/// `ln x! - ln(sqrt(2 pi x) (x/e)^x)` for integer `x >= 1`.
fn stirling_error(x: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if x <= 15.0 {
        return ln_gamma(x + 1.0) - (x + 0.5) * x.ln() + x - 0.5 * std::f64::consts::TAU.ln();
    }
    let xx = x * x;
    if x > 500.0 {
        (S0 - S1 / xx) / x
    } else if x > 80.0 {
        (S0 - (S1 - S2 / xx) / xx) / x
    } else if x > 35.0 {
        (S0 - (S1 - (S2 - S3 / xx) / xx) / xx) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / xx) / xx) / xx) / xx) / x
    }
}

/// `x ln(x/np) + np - x`, summed as a series when `x` is close to `np`.
fn deviance(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                break;
            }
            s = next;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `e^{-mean} mean^k / k!`, evaluated through log-gamma.
pub fn poisson_pmf(k: u64, mean: f64) -> Result<f64> {
    if !mean.is_finite() || mean < 0.0 {
        return Err(Error::domain(format!(
            "poisson mean must be finite and >= 0, got {mean}"
        )));
    }
    Ok(ln_poisson_pmf(k, mean).exp())
}

/// Returns `(P(Y <= n-1), P(Y >= n))` for `Y ~ Poisson(mean)`.
///
/// The smaller tail is summed directly, starting from its largest term
/// (computed in log space) and recurring away from the mode in linear
/// space; the other tail is its complement.
pub(crate) fn split_tails(n: u64, mean: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    if mean == 0.0 {
        return (1.0, 0.0);
    }
    let top = n - 1;
    if (top as f64) < mean {
        // lower tail: k = top, top-1, ..., 0 with pmf(k-1) = pmf(k) * k / mean
        let mut term = ln_poisson_pmf(top, mean).exp();
        let mut sum = term;
        let mut k = top;
        while k > 0 {
            term *= k as f64 / mean;
            sum += term;
            if term < TAIL_EPS * sum {
                break;
            }
            k -= 1;
        }
        let lower = sum.min(1.0);
        (lower, 1.0 - lower)
    } else {
        // upper tail: k = n, n+1, ... with pmf(k+1) = pmf(k) * mean / (k+1)
        let mut k = n;
        let mut term = ln_poisson_pmf(k, mean).exp();
        let mut sum = term;
        loop {
            k += 1;
            term *= mean / k as f64;
            sum += term;
            if term < TAIL_EPS * sum || term == 0.0 {
                break;
            }
        }
        let upper = sum.min(1.0);
        (1.0 - upper, upper)
    }
}

fn check_args(x: f64, threshold: f64, lambda: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain(format!(
            "molecule count must be finite and >= 0, got {x}"
        )));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!(
            "noise mean must be > 0, got {lambda}"
        )));
    }
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::domain(format!(
            "threshold must be > 0, got {threshold}"
        )));
    }
    Ok(())
}

/// Probability that a "1" carrying `x` molecules is read as "0":
/// `P(Y < threshold)` with `Y ~ Poisson(x + lambda)`.
pub fn pe_given_1(x: f64, threshold: f64, lambda: f64) -> Result<f64> {
    check_args(x, threshold, lambda)?;
    Ok(split_tails(decision_count(threshold), x + lambda).0)
}

/// Probability that a "0" with `x` interfering molecules is read as "1".
pub fn pe_given_0(x: f64, threshold: f64, lambda: f64) -> Result<f64> {
    check_args(x, threshold, lambda)?;
    Ok(split_tails(decision_count(threshold), x + lambda).1)
}

/// Derivative of [`pe_given_1`] in `x`: `-pmf(ceil(threshold) - 1, x + lambda)`.
pub fn dpe1(x: f64, threshold: f64, lambda: f64) -> Result<f64> {
    check_args(x, threshold, lambda)?;
    Ok(-slope(decision_count(threshold), x + lambda))
}

/// `|d/dmean P(Y <= n-1)| = pmf(n-1, mean)`.
pub(crate) fn slope(n: u64, mean: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    ln_poisson_pmf(n - 1, mean).exp()
}

/// Maximum-likelihood threshold between `Poisson(lambda)` and
/// `Poisson(signal + lambda)`: `signal / ln(1 + signal / lambda)`.
pub fn ml_fixed_threshold(signal: f64, lambda: f64) -> Result<f64> {
    ml_threshold_against(signal, lambda)
}

/// Same rule with an arbitrary "0"-hypothesis mean `floor` (noise plus ISI).
pub fn ml_threshold_against(signal: f64, floor: f64) -> Result<f64> {
    if !(signal > 0.0) || !signal.is_finite() {
        return Err(Error::domain(format!("signal must be > 0, got {signal}")));
    }
    if !(floor > 0.0) || !floor.is_finite() {
        return Err(Error::domain(format!(
            "noise floor must be > 0, got {floor}"
        )));
    }
    Ok(signal / (signal / floor).ln_1p())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_at_zero_is_exp_minus_mean() {
        for mu in [0.1, 1.0, 15.0, 300.0] {
            let p = poisson_pmf(0, mu).unwrap();
            assert!((p - (-mu).exp()).abs() <= 1e-15 * (-mu).exp().max(1e-300));
        }
    }

    #[test]
    fn pmf_matches_recurrence() {
        // oracle: pmf(k) = pmf(k-1) * mu / k from e^{-mu}
        let mu: f64 = 15.0;
        let mut p = (-mu).exp();
        for k in 1..=15u64 {
            p *= mu / k as f64;
        }
        let direct = poisson_pmf(15, mu).unwrap();
        assert!((direct - p).abs() < 1e-13);
        assert!((direct - 0.10244).abs() < 5e-6);
    }

    #[test]
    fn pmf_normalizes_at_large_mean() {
        for mu in [20.0f64, 500.0, 5000.0] {
            let hi = (mu + 40.0 * mu.sqrt()) as u64;
            let total: f64 = (0..=hi).map(|k| poisson_pmf(k, mu).unwrap()).sum();
            assert!((total - 1.0).abs() < 1e-12, "mu={mu} total={total}");
        }
        // k up to ~1e4 stays finite
        assert!(poisson_pmf(10_000, 10_000.0).unwrap() > 0.0);
    }

    #[test]
    fn pmf_rejects_bad_mean() {
        assert!(matches!(poisson_pmf(3, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(
            poisson_pmf(3, f64::INFINITY),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn tails_match_direct_summation() {
        // oracle: 35 direct pmf terms at mean 15
        let direct: f64 = (0..35u64).map(|y| poisson_pmf(y, 15.0).unwrap()).sum();
        let p1 = pe_given_1(0.0, 34.11, 15.0).unwrap();
        assert!((p1 - direct).abs() < 1e-14);
        // independent reference: scipy.stats.poisson.cdf(34, 15)
        assert!((p1 - 0.999_992_702_204_319).abs() < 1e-13, "{p1}");
        let upper: f64 = (35..200u64).map(|y| poisson_pmf(y, 15.0).unwrap()).sum();
        let p0 = pe_given_0(0.0, 34.11, 15.0).unwrap();
        assert!((p0 - upper).abs() < 1e-18);
        assert!((p0 - 7.297_795_680_63e-6).abs() < 1e-16, "{p0}");
    }

    #[test]
    fn complementary_and_escaping() {
        for x in [0.0, 3.0, 20.0, 50.0, 120.0] {
            let a = pe_given_1(x, 34.11, 15.0).unwrap();
            let b = pe_given_0(x, 34.11, 15.0).unwrap();
            assert!((a + b - 1.0).abs() <= 1e-15);
        }
        assert!(pe_given_1(3411.0, 34.11, 15.0).unwrap() < 1e-12);
        assert!(pe_given_0(0.0, 40.0, 3.0).unwrap() < 1e-15);
    }

    #[test]
    fn large_mean_falls_back_cleanly() {
        let p = pe_given_1(2000.0, 1900.0, 15.0).unwrap();
        let direct: f64 = (0..1900u64).map(|y| poisson_pmf(y, 2015.0).unwrap()).sum();
        assert!(
            (p - direct).abs() < 1e-14 && p > 1e-3 && p < 1e-2,
            "{p} {direct}"
        );
        let q = pe_given_0(2000.0, 1900.0, 15.0).unwrap();
        assert!((p + q - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_count_is_domain_error() {
        assert!(matches!(pe_given_1(-1.0, 10.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(pe_given_0(-1.0, 10.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(dpe1(-1.0, 10.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn derivative_matches_central_difference() {
        let h = 1e-4;
        let t = 34.11;
        let mut x = 0.0;
        while x <= 100.0 {
            let lo = if x < h { 0.0 } else { x - h };
            let fd = (pe_given_1(x + h, t, 15.0).unwrap() - pe_given_1(lo, t, 15.0).unwrap())
                / (x + h - lo);
            let d = dpe1(x, t, 15.0).unwrap();
            assert!(d < 0.0);
            assert!((fd - d).abs() < 1e-6, "x={x} fd={fd} d={d}");
            x += 2.5;
        }
    }

    #[test]
    fn derivative_magnitude_falls_past_the_mode() {
        let t = 34.11; // decision count 35, mode index 34
        let mut prev = f64::INFINITY;
        let mut x = 20.0; // x + 15 > 34
        while x < 150.0 {
            let d = dpe1(x, t, 15.0).unwrap().abs();
            assert!(d < prev);
            prev = d;
            x += 1.0;
        }
    }

    #[test]
    fn ml_threshold_values() {
        let t = ml_fixed_threshold(50.0, 15.0).unwrap();
        assert!((t - 34.0986).abs() < 1e-3);
        // likelihood ratio of Poisson(65) vs Poisson(15) crosses 1 at t
        let llr = |y: f64| y * (65.0f64 / 15.0).ln() - 50.0;
        assert!(llr(t).abs() < 1e-12);
        let boundary = 15.0 * (std::f64::consts::E - 1.0);
        assert!((ml_fixed_threshold(boundary, 15.0).unwrap() - boundary).abs() < 1e-9);
        assert!(matches!(
            ml_fixed_threshold(0.0, 15.0),
            Err(Error::Domain(_))
        ));
    }
}

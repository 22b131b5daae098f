//! Fixed-received-rate baseline: every "1" is released so that it arrives
//! with `p_0 M` molecules on top of the interference it compensates.

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::poisson::{ml_fixed_threshold, pe_given_0, pe_given_1};
use crate::schedule::ErrorReport;
use crate::schedule::StateError;

fn ratio(params: &SystemParams) -> Result<f64> {
    let (p0, p1) = (params.p(0), params.p(1));
    if !(p0 > p1 && p1 >= 0.0) {
        return Err(Error::domain(format!(
            "need p_0 > p_1 >= 0, got p_0 = {p0}, p_1 = {p1}"
        )));
    }
    Ok(p1 / p0)
}

fn partial_sum(r: f64, j: usize) -> f64 {
    // sum_{k=0}^{j} (-r)^k
    let mut s = 0.0;
    let mut term = 1.0;
    for _ in 0..=j {
        s += term;
        term *= -r;
    }
    s
}

/// Release of the `(j+1)`-th consecutive "1" after a "0" on a one-slot
/// channel: `M sum_{k=0}^{j} (-p_1/p_0)^k`.
pub fn strategy5_rates_1isi(j: usize, params: &SystemParams) -> Result<f64> {
    Ok(params.m() * partial_sum(ratio(params)?, j))
}

/// Release after the two previous releases `prev1` (last slot) and `prev2`,
/// clamped at zero; the same rule for any memory up to two slots.
pub fn strategy5_rates_online(prev1: f64, prev2: f64, params: &SystemParams) -> Result<f64> {
    let p0 = params.p(0);
    if !(p0 > 0.0) {
        return Err(Error::domain("p_0 must be > 0"));
    }
    Ok((params.m() - (params.p(1) * prev1 + params.p(2) * prev2) / p0).max(0.0))
}

/// Threshold of the baseline's fixed receiver: ML between `lambda` and
/// `p_0 M + lambda`, the rate every "1" arrives with.
pub fn strategy5_threshold(params: &SystemParams) -> Result<f64> {
    ml_fixed_threshold(params.p(0) * params.m(), params.lambda)
}

fn zero_error(params: &SystemParams, t: f64, j: usize) -> Result<f64> {
    // a "0" following j >= 1 consecutive "1"s sees p_1 times the last release
    let x = params.p(1) * strategy5_rates_1isi(j - 1, params)?;
    pe_given_0(x, t, params.lambda)
}

fn one_symbol_check(params: &SystemParams) -> Result<()> {
    params.validate_analytic()?;
    if params.memory() > 1 {
        return Err(Error::Precondition(
            "closed form covers one-slot memory only".into(),
        ));
    }
    Ok(())
}

/// `P_e` of the baseline on a one-slot channel, the state series summed
/// until its terms drop below `1e-18` of the total.
pub fn strategy5_pe_1isi(params: &SystemParams) -> Result<ErrorReport> {
    one_symbol_check(params)?;
    let t = strategy5_threshold(params)?;
    let lambda = params.lambda;
    let e1 = pe_given_1(params.p(0) * params.m(), t, lambda)?;
    let e00 = pe_given_0(0.0, t, lambda)?;
    let mut pe0 = 0.5 * e00;
    let mut rows = vec![StateError {
        state: 0,
        probability: 0.5,
        conditional_error: 0.5 * (e00 + e1),
    }];
    let mut j = 1;
    loop {
        let w = 0.5f64.powi(j as i32 + 1);
        let e0 = zero_error(params, t, j)?;
        pe0 += w * e0;
        rows.push(StateError {
            state: j,
            probability: w,
            conditional_error: 0.5 * (e0 + e1),
        });
        if w < 1e-18 * pe0.max(1e-300) || j > 2000 {
            break;
        }
        j += 1;
    }
    Ok(ErrorReport::from_conditionals(pe0, e1, rows))
}

/// Even/odd truncations of the state series: `(lower, upper)` with the
/// states beyond the cut pinned at the nearest odd (lower) or even (upper)
/// partial sum of the release series.
pub fn strategy5_pe_bounds_1isi(params: &SystemParams, k: usize) -> Result<(f64, f64)> {
    one_symbol_check(params)?;
    if k == 0 {
        return Err(Error::domain("truncation index k must be >= 1"));
    }
    let t = strategy5_threshold(params)?;
    let lambda = params.lambda;
    let head =
        0.25 * pe_given_0(0.0, t, lambda)? + 0.5 * pe_given_1(params.p(0) * params.m(), t, lambda)?;
    let w = |j: usize| 0.5f64.powi(j as i32 + 2);
    let mut upper = head;
    for j in 1..=2 * k {
        upper += w(j) * zero_error(params, t, j)?;
    }
    // every state j > 2k follows a release no larger than the even sum
    upper += w(2 * k) * zero_error(params, t, 2 * k + 1)?;
    let mut lower = head;
    for j in 1..2 * k {
        lower += w(j) * zero_error(params, t, j)?;
    }
    lower += w(2 * k - 1) * zero_error(params, t, 2 * k)?;
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> SystemParams {
        SystemParams::reference(15.0).with_hitting(vec![0.9, 0.1])
    }

    #[test]
    fn rates() {
        let p = one();
        assert_eq!(strategy5_rates_1isi(0, &p).unwrap(), 50.0);
        assert!((strategy5_rates_1isi(200, &p).unwrap() - 45.0).abs() < 1e-10);
        for j in 1..10 {
            let x = strategy5_rates_1isi(j, &p).unwrap();
            let prev = strategy5_rates_1isi(j - 1, &p).unwrap();
            assert!((0.9 * x + 0.1 * prev - 45.0).abs() < 1e-12);
            assert!((strategy5_rates_online(prev, 0.0, &p).unwrap() - x).abs() < 1e-12);
        }
        assert_eq!(strategy5_rates_online(0.0, 0.0, &p).unwrap(), 50.0);
        let two = SystemParams::reference(15.0).with_hitting(vec![0.3, 0.3, 0.3]);
        assert_eq!(strategy5_rates_online(40.0, 30.0, &two).unwrap(), 0.0);
        assert!(strategy5_rates_1isi(
            1,
            &SystemParams::reference(15.0).with_hitting(vec![0.4, 0.5])
        )
        .is_err());
    }

    #[test]
    fn bounds_sandwich_and_tighten() {
        for lambda in [3.0, 9.0, 15.0] {
            let p = one().with_lambda(lambda);
            let exact = strategy5_pe_1isi(&p).unwrap().pe_total;
            let mut prev: Option<(f64, f64)> = None;
            for k in 1..=6 {
                let (lo, hi) = strategy5_pe_bounds_1isi(&p, k).unwrap();
                assert!(lo <= exact && exact <= hi, "k={k} {lo} {exact} {hi}");
                assert!(lo < hi);
                if let Some((plo, phi)) = prev {
                    assert!(hi <= phi && lo >= plo);
                }
                prev = Some((lo, hi));
            }
        }
    }
}

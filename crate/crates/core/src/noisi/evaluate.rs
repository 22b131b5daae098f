use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::poisson::{pe_given_0, pe_given_1};
use crate::schedule::{
    validate_schedule, ErrorReport, IncrementSchedule, StateError, ThresholdPolicy,
};

/// Non-adaptive link: every "1" carries `M` molecules, fixed ML threshold.
pub fn pe_strategy1(params: &SystemParams) -> Result<ErrorReport> {
    params.validate_analytic()?;
    let t = params.fixed_threshold()?;
    let p0 = pe_given_0(0.0, t, params.lambda)?;
    let p1 = pe_given_1(params.m(), t, params.lambda)?;
    let rows = vec![StateError {
        state: 0,
        probability: 1.0,
        conditional_error: 0.5 * (p0 + p1),
    }];
    Ok(ErrorReport::from_conditionals(p0, p1, rows))
}

/// `F(Delta) = sum_j 2^{-j} P_{e|1}(M + Delta_j)` with the exact geometric tail.
pub fn objective(
    params: &SystemParams,
    schedule: &IncrementSchedule,
    policy: &ThresholdPolicy,
) -> Result<f64> {
    Ok(pe_schedule_unchecked(params, schedule, policy)?.pe_given_1)
}

/// Error probability of a schedule on the ISI-free link.
///
/// A "0" sent from state `s_{j-1}` is decoded with that state's threshold, so
/// `P_{e|0}` is state-averaged under a per-state policy.
pub fn pe_schedule(
    params: &SystemParams,
    schedule: &IncrementSchedule,
    policy: &ThresholdPolicy,
) -> Result<ErrorReport> {
    params.validate_analytic()?;
    let feas = validate_schedule(schedule, params.storage());
    if !feas.feasible {
        return Err(Error::Precondition(format!(
            "schedule violates the storage constraints at prefix {}",
            feas.first_violation.unwrap_or(0)
        )));
    }
    let mut r = pe_schedule_unchecked(params, schedule, policy)?;
    r.feasible = Some(true);
    Ok(r)
}

/// Same as [`pe_schedule`] without the feasibility precondition; used for
/// value bounds whose surrogate schedules overspend the storage.
pub(crate) fn pe_schedule_unchecked(
    params: &SystemParams,
    schedule: &IncrementSchedule,
    policy: &ThresholdPolicy,
) -> Result<ErrorReport> {
    policy.validate()?;
    let m = params.m();
    let lambda = params.lambda;
    let states = schedule.len().max(policy.state_count());
    let mut pe0 = 0.0;
    let mut pe1 = 0.0;
    let mut rows = Vec::with_capacity(states + 1);
    let mut weight = 1.0;
    for j in 1..=states {
        weight *= 0.5;
        let t = policy.threshold(j);
        let x = m + schedule.delta(j);
        if x < 0.0 {
            return Err(Error::domain(format!(
                "state {j} releases {x} < 0 molecules"
            )));
        }
        let e0 = pe_given_0(0.0, t, lambda)?;
        let e1 = pe_given_1(x, t, lambda)?;
        pe0 += weight * e0;
        pe1 += weight * e1;
        rows.push(StateError {
            state: j - 1,
            probability: weight,
            conditional_error: 0.5 * (e0 + e1),
        });
    }
    // states s_L, s_{L+1}, ... share Delta = 0 and the tail threshold
    let t = policy.tail();
    let e0 = pe_given_0(0.0, t, lambda)?;
    let e1 = pe_given_1(m, t, lambda)?;
    pe0 += weight * e0;
    pe1 += weight * e1;
    rows.push(StateError {
        state: states,
        probability: weight,
        conditional_error: 0.5 * (e0 + e1),
    });
    Ok(ErrorReport::from_conditionals(pe0, pe1, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_schedule_reduces_to_strategy1() {
        let p = SystemParams::reference(15.0);
        let t = p.fixed_threshold().unwrap();
        let a = pe_schedule(&p, &IncrementSchedule::zero(), &ThresholdPolicy::Fixed(t)).unwrap();
        let b = pe_strategy1(&p).unwrap();
        assert!((a.pe_total - b.pe_total).abs() < 1e-18);
        assert!((a.pe_total - 0.5 * (a.pe_given_0 + a.pe_given_1)).abs() < 1e-20);
    }

    #[test]
    fn strategy1_ignores_storage() {
        let a = pe_strategy1(&SystemParams::reference(15.0)).unwrap();
        let b = pe_strategy1(&SystemParams::reference(15.0).with_storage(10.0)).unwrap();
        assert_eq!(a.pe_total, b.pe_total);
    }

    #[test]
    fn strategy1_small_noise_limit() {
        // threshold pinned inside (0, M) while lambda -> 0
        let lambda = 1e-9;
        let t = 25.0;
        let p0 = pe_given_0(0.0, t, lambda).unwrap();
        let p1 = pe_given_1(50.0, t, lambda).unwrap();
        assert!(p0 < 1e-100);
        let report = 0.5 * (p0 + p1);
        assert!((report - 0.5 * p1).abs() < 1e-100);
    }

    #[test]
    fn infeasible_schedule_is_rejected() {
        let p = SystemParams::reference(15.0);
        let t = p.fixed_threshold().unwrap();
        let err = pe_schedule(
            &p,
            &IncrementSchedule::new(vec![43.0]),
            &ThresholdPolicy::Fixed(t),
        );
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn per_state_rows_sum_to_total() {
        let p = SystemParams::reference(15.0);
        let s = IncrementSchedule::new(vec![20.0, 12.0, 10.0]);
        let pol = ThresholdPolicy::PerState {
            values: vec![40.0, 38.0, 37.0],
            tail: 34.1,
        };
        let r = pe_schedule(&p, &s, &pol).unwrap();
        let from_rows: f64 = r
            .per_state
            .iter()
            .map(|s| s.probability * s.conditional_error)
            .sum();
        assert!((from_rows - r.pe_total).abs() < 1e-18);
        let mass: f64 = r.per_state.iter().map(|s| s.probability).sum();
        assert!((mass - 1.0).abs() < 1e-15);
    }
}

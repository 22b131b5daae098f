use serde::{Deserialize, Serialize};

use super::{boundary_sequence, pe_schedule_unchecked};
use crate::error::Result;
use crate::params::SystemParams;
use crate::schedule::{IncrementSchedule, ThresholdPolicy};

/// Lower and upper bounds on the minimum error probability.
///
/// The upper bound evaluates the feasible surrogate `Delta_i = a_{i+1}`; the
/// lower bound evaluates `Delta_i = a_i`, which overspends the storage and is
/// only a value bound.
pub fn pe_bounds(params: &SystemParams, policy: &ThresholdPolicy) -> Result<(f64, f64)> {
    let seq = boundary_sequence(params, policy)?;
    let lower_sched = IncrementSchedule::new(seq.a[..seq.j].to_vec());
    let upper_sched = IncrementSchedule::new(seq.a[1..].to_vec());
    let lower = pe_schedule_unchecked(params, &lower_sched, policy)?.pe_total;
    let upper = pe_schedule_unchecked(params, &upper_sched, policy)?.pe_total;
    Ok((lower, upper))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountBound {
    /// `min_m { m + B_M / a_{J-m+1} }`; the number of positive increments is
    /// strictly below this value.
    pub value: f64,
    /// `floor(value)`, an integer the count never exceeds.
    pub bound: usize,
    pub j: usize,
}

pub fn increment_count_bound(
    params: &SystemParams,
    policy: &ThresholdPolicy,
) -> Result<CountBound> {
    let seq = boundary_sequence(params, policy)?;
    if seq.j == 0 {
        return Ok(CountBound {
            value: 0.0,
            bound: 0,
            j: 0,
        });
    }
    let budget = params.storage();
    let value = (1..=seq.j)
        .map(|m| m as f64 + budget / seq.get(seq.j - m + 1))
        .fold(f64::INFINITY, f64::min);
    Ok(CountBound {
        value,
        bound: value.floor() as usize,
        j: seq.j,
    })
}

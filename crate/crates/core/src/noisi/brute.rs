use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::poisson::pe_given_1;
use crate::schedule::{IncrementSchedule, ThresholdPolicy};

/// Largest enumeration `brute_force_schedule` agrees to run.
pub const BRUTE_FORCE_GUARD: f64 = 1e8;

/// Number of ways to place `units` grid steps into `states` non-negative slots
/// with total at most `units`: `C(units + states, states)`.
fn combinations(units: usize, states: usize) -> f64 {
    (1..=states).fold(1.0, |acc, i| acc * (units + i) as f64 / i as f64)
}

/// Exhaustive minimizer of the truncated objective over grid schedules.
///
/// Enumerates every schedule whose first `max_states` increments are
/// non-negative multiples of `grid_step` summing to at most `B_M` (these
/// satisfy all prefix constraints); later states use `Delta = 0`, so the
/// objective tail `2^{-max_states} P_{e|1}(M)` is exact.
pub fn brute_force_schedule(
    params: &SystemParams,
    policy: &ThresholdPolicy,
    grid_step: f64,
    max_states: usize,
) -> Result<IncrementSchedule> {
    params.validate_analytic()?;
    policy.validate()?;
    if !(grid_step > 0.0) || !grid_step.is_finite() {
        return Err(Error::domain(format!(
            "grid step must be > 0, got {grid_step}"
        )));
    }
    if max_states == 0 {
        return Err(Error::domain("max_states must be >= 1"));
    }
    let budget = params.storage();
    let units = (budget / grid_step + 1e-9).floor() as usize;
    let combos = combinations(units, max_states);
    if combos > BRUTE_FORCE_GUARD {
        return Err(Error::Guard {
            combinations: combos,
            guard: BRUTE_FORCE_GUARD,
        });
    }
    let m = params.m();
    let lambda = params.lambda;
    // weighted per-state costs on the grid
    let mut table = Vec::with_capacity(max_states);
    for j in 1..=max_states {
        let t = policy.threshold(j);
        let w = 0.5f64.powi(j as i32);
        let row = (0..=units)
            .map(|u| pe_given_1(m + u as f64 * grid_step, t, lambda).map(|v| w * v))
            .collect::<Result<Vec<f64>>>()?;
        table.push(row);
    }
    let mut best = (f64::INFINITY, vec![0usize; max_states]);
    let mut current = vec![0usize; max_states];
    search(&table, 0, units, 0.0, &mut current, &mut best);
    let deltas = best.1.iter().map(|u| *u as f64 * grid_step).collect();
    Ok(IncrementSchedule::new(deltas))
}

fn search(
    table: &[Vec<f64>],
    depth: usize,
    remaining: usize,
    acc: f64,
    current: &mut Vec<usize>,
    best: &mut (f64, Vec<usize>),
) {
    let row = &table[depth];
    if depth + 1 == table.len() {
        for (u, cost) in row.iter().enumerate().take(remaining + 1) {
            let v = acc + cost;
            if v < best.0 {
                current[depth] = u;
                best.0 = v;
                best.1.copy_from_slice(current);
            }
        }
        return;
    }
    for (u, cost) in row.iter().enumerate().take(remaining + 1) {
        current[depth] = u;
        search(table, depth + 1, remaining - u, acc + cost, current, best);
    }
}

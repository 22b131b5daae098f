//! Adaptive-threshold receiver and joint increment/threshold optimization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noisi::{pe_schedule, solve_increments};
use crate::params::SystemParams;
use crate::poisson::ml_fixed_threshold;
use crate::schedule::{ErrorReport, IncrementSchedule, ThresholdPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSolution {
    pub schedule: IncrementSchedule,
    pub policy: ThresholdPolicy,
    pub pe: ErrorReport,
    pub iterations: usize,
    pub converged: bool,
    /// Total error probability after each iteration, starting point first.
    pub history: Vec<f64>,
}

/// Per-state ML thresholds `(M + Delta_j) / ln(1 + (M + Delta_j)/lambda)`
/// for `j = 1..J`, with the `M`-threshold as the tail.
pub fn adaptive_thresholds(
    params: &SystemParams,
    schedule: &IncrementSchedule,
) -> Result<ThresholdPolicy> {
    let m = params.m();
    let values = schedule
        .deltas()
        .iter()
        .map(|d| ml_fixed_threshold(m + d, params.lambda))
        .collect::<Result<Vec<_>>>()?;
    Ok(ThresholdPolicy::PerState {
        values,
        tail: ml_fixed_threshold(m, params.lambda)?,
    })
}

/// Error probability of the adaptive receiver, error propagation ignored.
pub fn pe_adaptive(
    params: &SystemParams,
    schedule: &IncrementSchedule,
    policy: &ThresholdPolicy,
) -> Result<ErrorReport> {
    if policy.is_fixed() {
        return Err(Error::Precondition(
            "pe_adaptive needs a per-state policy".into(),
        ));
    }
    pe_schedule(params, schedule, policy)
}

/// Optimal increments under the fixed ML threshold (strategy 2).
pub fn optimize_strategy2(params: &SystemParams) -> Result<JointSolution> {
    let policy = ThresholdPolicy::Fixed(params.fixed_threshold()?);
    let (schedule, _) = solve_increments(params, &policy)?;
    let pe = pe_schedule(params, &schedule, &policy)?;
    Ok(JointSolution {
        history: vec![pe.pe_total],
        schedule,
        policy,
        pe,
        iterations: 1,
        converged: true,
    })
}

/// Strategy-2 increments followed by one pass of adaptive thresholds.
pub fn optimize_strategy3(params: &SystemParams) -> Result<JointSolution> {
    let s2 = optimize_strategy2(params)?;
    let policy = adaptive_thresholds(params, &s2.schedule)?;
    let pe = pe_adaptive(params, &s2.schedule, &policy)?;
    Ok(JointSolution {
        history: vec![s2.pe.pe_total, pe.pe_total],
        schedule: s2.schedule,
        policy,
        pe,
        iterations: 1,
        converged: true,
    })
}

/// Alternates `solve_increments` under the current thresholds with
/// `adaptive_thresholds` until the error improves by less than `tol`.
///
/// Both steps are exact minimizations of the same objective over one block
/// of variables, so the error sequence never increases; a rise signals a
/// bug and is reported as an internal error.
pub fn optimize_strategy4(
    params: &SystemParams,
    tol: f64,
    max_iter: usize,
) -> Result<JointSolution> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be > 0, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::domain("max_iter must be >= 1"));
    }
    let s2 = optimize_strategy2(params)?;
    let mut schedule = s2.schedule;
    let mut history = vec![s2.pe.pe_total];
    let mut policy = adaptive_thresholds(params, &schedule)?;
    let mut pe = pe_adaptive(params, &schedule, &policy)?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let prev = *history.last().unwrap();
        let step = pe.pe_total;
        check_descent(prev, step, iterations)?;
        history.push(step);
        if prev - step < tol {
            converged = true;
            break;
        }
        let (next, _) = solve_increments(params, &policy)?;
        let after_solve = pe_adaptive(params, &next, &policy)?;
        check_descent(step, after_solve.pe_total, iterations)?;
        schedule = next;
        policy = adaptive_thresholds(params, &schedule)?;
        pe = pe_adaptive(params, &schedule, &policy)?;
    }
    Ok(JointSolution {
        schedule,
        policy,
        pe,
        iterations,
        converged,
        history,
    })
}

fn check_descent(before: f64, after: f64, iteration: usize) -> Result<()> {
    if after > before + 1e-15 + 1e-12 * before {
        Err(Error::Internal(format!(
            "strategy 4 error rose from {before:e} to {after:e} at iteration {iteration}"
        )))
    } else {
        Ok(())
    }
}

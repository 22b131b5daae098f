use serde::{Deserialize, Serialize};

use super::SlopeCurve;
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::schedule::{IncrementSchedule, ThresholdPolicy};

const MAX_BISECTIONS: usize = 200;
/// Hard cap on the number of states examined for one multiplier value.
const MAX_STATES: usize = 10_000;

/// Stationarity evidence for a solved schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktCertificate {
    /// Common value of `2^{-j} |dP_{e|1}/dx|(M + Delta_j)` over active states;
    /// the multiplier of the total-storage constraint.
    pub mu: f64,
    /// Largest relative deviation of an active state's ratio from `mu`.
    pub residual: f64,
    pub active_prefix_sum: f64,
    pub bisection_steps: usize,
}

struct WaterFill {
    curves: Vec<SlopeCurve>,
    tail: SlopeCurve,
    m: f64,
}

impl WaterFill {
    fn curve(&self, j: usize) -> SlopeCurve {
        if j <= self.curves.len() {
            self.curves[j - 1]
        } else {
            self.tail
        }
    }

    /// Increments for multiplier `exp(log_mu)`; inactive states get zero.
    fn deltas(&self, log_mu: f64) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        let mut j = 1;
        loop {
            let c = self.curve(j);
            let level = (log_mu + j as f64 * std::f64::consts::LN_2).exp();
            let top = c.at(self.m);
            if level < top {
                out.push(c.invert(level, self.m)? - self.m);
            } else if j > self.curves.len() {
                // past the per-state list every later state is inactive too
                break;
            } else {
                out.push(0.0);
            }
            j += 1;
            if j > MAX_STATES {
                return Err(Error::numeric(
                    "solve_increments",
                    "active set does not terminate",
                ));
            }
        }
        Ok(out)
    }
}

/// Optimal increments by water-filling on the storage multiplier.
///
/// For a trial multiplier `mu` each state solves `g_j(M + Delta_j) = 2^j mu`
/// on the decreasing branch of `g_j = |dP_{e|1}/dx|` (or sits at zero), and
/// `mu` is bisected in log space until the increments spend exactly `B_M`.
pub fn solve_increments(
    params: &SystemParams,
    policy: &ThresholdPolicy,
) -> Result<(IncrementSchedule, KktCertificate)> {
    params.validate_analytic()?;
    policy.validate()?;
    let m = params.m();
    let budget = params.storage();
    let lambda = params.lambda;
    let curves: Vec<SlopeCurve> = match policy {
        ThresholdPolicy::Fixed(_) => Vec::new(),
        ThresholdPolicy::PerState { values, .. } => {
            values.iter().map(|t| SlopeCurve::new(*t, lambda)).collect()
        }
    };
    let tail = SlopeCurve::new(policy.tail(), lambda);
    for c in curves.iter().chain(std::iter::once(&tail)) {
        c.require_decreasing_from(m)?;
    }
    let wf = WaterFill { curves, tail, m };

    if budget == 0.0 {
        let mu = (1..=wf.curves.len() + 1)
            .map(|j| wf.curve(j).at(m) / 2f64.powi(j as i32))
            .fold(0.0, f64::max);
        return Ok((
            IncrementSchedule::zero(),
            KktCertificate {
                mu,
                residual: 0.0,
                active_prefix_sum: 0.0,
                bisection_steps: 0,
            },
        ));
    }

    // S(mu) is continuous and strictly decreasing where positive.
    let c1 = wf.curve(1);
    let mut lo = (c1.at(m + budget) / 2.0).ln(); // Delta_1 alone spends B_M
    let mut hi = (1..=wf.curves.len() + 1)
        .map(|j| wf.curve(j).at(m) / 2f64.powi(j as i32))
        .fold(0.0, f64::max)
        .ln(); // nothing spent
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::numeric(
            "solve_increments",
            format!("degenerate multiplier bracket [{lo}, {hi}]"),
        ));
    }
    let sum = |log_mu: f64| -> Result<(Vec<f64>, f64)> {
        let d = wf.deltas(log_mu)?;
        let s = d.iter().sum();
        Ok((d, s))
    };
    let mut steps = 0;
    let mut best = sum(lo)?;
    let mut best_log_mu = lo;
    while steps < MAX_BISECTIONS {
        steps += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (d, s) = sum(mid)?;
        if (s - budget).abs() < (best.1 - budget).abs() {
            best = (d.clone(), s);
            best_log_mu = mid;
        }
        if (s - budget).abs() <= 1e-13 * budget {
            break;
        }
        if s > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (deltas, total) = best;
    if (total - budget).abs() > 1e-9 * budget {
        return Err(Error::numeric(
            "solve_increments",
            format!(
                "no convergence after {steps} bisections: spent {total} of {budget}, log mu bracket [{lo}, {hi}]"
            ),
        ));
    }
    let mu = best_log_mu.exp();
    let mut residual: f64 = 0.0;
    for (i, d) in deltas.iter().enumerate() {
        if *d > 0.0 {
            let j = i + 1;
            let ratio = wf.curve(j).at(m + d) / 2f64.powi(j as i32);
            residual = residual.max((ratio - mu).abs() / mu);
        }
    }
    Ok((
        IncrementSchedule::new(deltas),
        KktCertificate {
            mu,
            residual,
            active_prefix_sum: total,
            bisection_steps: steps,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson::dpe1;
    use crate::schedule::validate_schedule;

    fn fixed(p: &SystemParams) -> ThresholdPolicy {
        ThresholdPolicy::Fixed(p.fixed_threshold().unwrap())
    }

    #[test]
    fn zero_storage_gives_zero_schedule() {
        let p = SystemParams::reference(15.0).with_storage(0.0);
        let (s, cert) = solve_increments(&p, &fixed(&p)).unwrap();
        assert!(s.is_empty());
        assert_eq!(cert.active_prefix_sum, 0.0);
    }

    #[test]
    fn reference_solution_is_decreasing_and_spends_storage() {
        for lambda in [3.0, 7.0, 11.0, 15.0] {
            let p = SystemParams::reference(lambda);
            let pol = fixed(&p);
            let (s, cert) = solve_increments(&p, &pol).unwrap();
            assert!((s.total() - 42.0).abs() <= 1e-9 * 42.0);
            assert!(s.deltas().windows(2).all(|w| w[0] > w[1] + 1e-12));
            assert!(s.deltas().iter().all(|d| *d > 0.0));
            assert!(cert.residual < 1e-9, "residual {}", cert.residual);
            let feas = validate_schedule(&s, p.storage());
            assert!(feas.feasible);
            // stationarity through the public derivative
            let t = pol.threshold(1);
            let ratios: Vec<f64> = (1..=s.len())
                .map(|j| dpe1(50.0 + s.delta(j), t, lambda).unwrap() / 2f64.powi(j as i32))
                .collect();
            for r in &ratios {
                assert!((r / ratios[0] - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_threshold_above_mode() {
        let p = SystemParams::reference(15.0);
        let err = solve_increments(&p, &ThresholdPolicy::Fixed(80.0));
        assert!(matches!(err, Err(Error::Domain(_))));
    }
}

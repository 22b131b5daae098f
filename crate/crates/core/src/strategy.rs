//! The six transmission/reception strategies as concrete specs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adaptive::{optimize_strategy2, optimize_strategy3, optimize_strategy4};
use crate::error::{Error, Result};
use crate::isi::{
    exact_pe_isi, isi_adaptive_policy, optimize_strategy4_isi, strategy5_pe_1isi,
    strategy5_pe_bounds_1isi, strategy5_threshold, suboptimal_increments_1isi,
    suboptimal_increments_2isi, DescentOptions,
};
use crate::noisi::{pe_bounds, solve_increments};
use crate::params::SystemParams;
use crate::schedule::{IncrementSchedule, ThresholdPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Fixed release, fixed threshold.
    S1,
    /// Optimal increments, fixed threshold.
    S2,
    /// Optimal increments, one pass of adaptive thresholds.
    S3,
    /// Jointly optimized increments and thresholds.
    S4,
    /// Fixed received rate, fixed threshold.
    S5,
    /// Sub-optimal ISI increments with ISI-aware adaptive thresholds.
    S6,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::S1,
        Strategy::S2,
        Strategy::S3,
        Strategy::S4,
        Strategy::S5,
        Strategy::S6,
    ];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase();
        let t = t
            .strip_prefix("STRATEGY")
            .unwrap_or(&t)
            .trim_start_matches(['-', '_', ' ']);
        match t {
            "S1" | "1" => Ok(Strategy::S1),
            "S2" | "2" => Ok(Strategy::S2),
            "S3" | "3" => Ok(Strategy::S3),
            "S4" | "4" => Ok(Strategy::S4),
            "S5" | "5" => Ok(Strategy::S5),
            "S6" | "6" => Ok(Strategy::S6),
            _ => Err(Error::Config(format!("unknown strategy '{s}'"))),
        }
    }
}

/// A strategy fixed to concrete increments and thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub name: Strategy,
    /// Empty for S1 and S5 (S5 computes its releases online).
    pub schedule: IncrementSchedule,
    pub policy: ThresholdPolicy,
    /// Channel memory the strategy was designed for.
    pub memory: usize,
}

impl StrategySpec {
    /// Builds the strategy for `params`, running whatever optimization it
    /// needs.
    pub fn build(name: Strategy, params: &SystemParams) -> Result<Self> {
        params.validate_analytic()?;
        let memory = params.memory();
        let (schedule, policy) = match name {
            Strategy::S1 => (
                IncrementSchedule::zero(),
                ThresholdPolicy::Fixed(params.fixed_threshold()?),
            ),
            Strategy::S2 => {
                let s = optimize_strategy2(params)?;
                (s.schedule, s.policy)
            }
            Strategy::S3 => {
                let s = optimize_strategy3(params)?;
                (s.schedule, s.policy)
            }
            Strategy::S4 if memory == 0 => {
                let s = optimize_strategy4(params, 1e-12, 200)?;
                (s.schedule, s.policy)
            }
            Strategy::S4 => {
                let s = optimize_strategy4_isi(params, &DescentOptions::default())?;
                (s.schedule, s.policy)
            }
            Strategy::S5 => (
                IncrementSchedule::zero(),
                ThresholdPolicy::Fixed(strategy5_threshold(params)?),
            ),
            Strategy::S6 => {
                let fixed = ThresholdPolicy::Fixed(params.fixed_threshold()?);
                let (noisi, _) = solve_increments(params, &fixed)?;
                let s = match memory {
                    0 => noisi,
                    1 => suboptimal_increments_1isi(params, &noisi)?,
                    _ => suboptimal_increments_2isi(params, &noisi)?,
                };
                let pol = isi_adaptive_policy(params, &s)?;
                (s, pol)
            }
        };
        let spec = StrategySpec {
            name,
            schedule,
            policy,
            memory,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        if self.memory > 2 {
            return Err(Error::Unsupported(format!(
                "strategy memory {} > 2",
                self.memory
            )));
        }
        match self.name {
            Strategy::S1 if !self.schedule.is_empty() || !self.policy.is_fixed() => Err(
                Error::Config("S1 needs the zero schedule and a fixed threshold".into()),
            ),
            Strategy::S5 if !self.policy.is_fixed() => {
                Err(Error::Config("S5 needs a fixed threshold".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Analytic error probability of a spec, with bounds where they exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticValue {
    /// `None` when no closed form exists (S5 on a two-slot channel).
    pub pe: Option<f64>,
    pub bounds: Option<(f64, f64)>,
    /// Prefix feasibility of the schedule (S6 can overspend).
    pub feasible: bool,
}

/// Truncation index used for the S5 bounds.
pub const S5_BOUND_K: usize = 3;

pub fn analytic_pe(spec: &StrategySpec, params: &SystemParams) -> Result<AnalyticValue> {
    let memory = params.memory();
    match spec.name {
        Strategy::S5 if memory <= 1 => Ok(AnalyticValue {
            pe: Some(strategy5_pe_1isi(params)?.pe_total),
            bounds: Some(strategy5_pe_bounds_1isi(params, S5_BOUND_K)?),
            feasible: true,
        }),
        Strategy::S5 => Ok(AnalyticValue {
            pe: None,
            bounds: None,
            feasible: true,
        }),
        _ => {
            let r = exact_pe_isi(params, &spec.schedule, &spec.policy, memory)?;
            let bounds = if spec.name == Strategy::S2 && memory == 0 {
                Some(pe_bounds(params, &spec.policy)?)
            } else {
                None
            };
            Ok(AnalyticValue {
                pe: Some(r.pe_total),
                bounds,
                feasible: r.feasible.unwrap_or(true),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        assert_eq!("s3".parse::<Strategy>().unwrap(), Strategy::S3);
        assert_eq!("strategy-5".parse::<Strategy>().unwrap(), Strategy::S5);
        assert_eq!("4".parse::<Strategy>().unwrap(), Strategy::S4);
        assert!(matches!("S9".parse::<Strategy>(), Err(Error::Config(_))));
    }

    #[test]
    fn s1_shape_enforced() {
        let p = SystemParams::reference(15.0);
        let mut s = StrategySpec::build(Strategy::S1, &p).unwrap();
        s.schedule = IncrementSchedule::new(vec![1.0]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn s6_without_memory_is_s3() {
        let p = SystemParams::reference(9.0);
        let a = analytic_pe(&StrategySpec::build(Strategy::S6, &p).unwrap(), &p).unwrap();
        let b = analytic_pe(&StrategySpec::build(Strategy::S3, &p).unwrap(), &p).unwrap();
        assert!((a.pe.unwrap() - b.pe.unwrap()).abs() < 1e-12 * b.pe.unwrap());
    }

    #[test]
    fn s6_overspends_on_isi_channels() {
        let p = SystemParams::reference(15.0).with_hitting(vec![0.9, 0.1]);
        let a = analytic_pe(&StrategySpec::build(Strategy::S6, &p).unwrap(), &p).unwrap();
        assert!(!a.feasible);
    }
}

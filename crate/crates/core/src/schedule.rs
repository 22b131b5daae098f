//! Increment schedules, threshold policies and error reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-state molecule increments `Delta_1, Delta_2, ...`.
///
/// `Delta_j` is added to the `M` molecules released for a "1" sent in state
/// `s_{j-1}` (after `j - 1` consecutive ones). Entries past the stored ones
/// are zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IncrementSchedule {
    deltas: Vec<f64>,
}

impl IncrementSchedule {
    pub fn new(mut deltas: Vec<f64>) -> Self {
        while deltas.last() == Some(&0.0) {
            deltas.pop();
        }
        IncrementSchedule { deltas }
    }

    pub fn zero() -> Self {
        IncrementSchedule::default()
    }

    /// Number of stored entries; every `Delta_j` with `j > len()` is zero.
    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    /// Number of strictly positive increments.
    pub fn positive_count(&self) -> usize {
        self.deltas.iter().filter(|d| **d > 0.0).count()
    }

    /// `Delta_j`, 1-based.
    pub fn delta(&self, j: usize) -> f64 {
        if j == 0 {
            return 0.0;
        }
        self.deltas.get(j - 1).copied().unwrap_or(0.0)
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn total(&self) -> f64 {
        self.deltas.iter().sum()
    }

    /// Release-duration increment `tau_j = Delta_j / beta`.
    pub fn tau(&self, j: usize, beta: f64) -> f64 {
        self.delta(j) / beta
    }
}

/// The receiver's decision thresholds.
///
/// State index `j >= 1` refers to state `s_{j-1}`, matching the schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ThresholdPolicy {
    Fixed(f64),
    PerState { values: Vec<f64>, tail: f64 },
}

impl ThresholdPolicy {
    pub fn threshold(&self, j: usize) -> f64 {
        match self {
            ThresholdPolicy::Fixed(t) => *t,
            ThresholdPolicy::PerState { values, tail } => {
                if j >= 1 && j <= values.len() {
                    values[j - 1]
                } else {
                    *tail
                }
            }
        }
    }

    /// Number of state-specific entries (0 for a fixed policy).
    pub fn state_count(&self) -> usize {
        match self {
            ThresholdPolicy::Fixed(_) => 0,
            ThresholdPolicy::PerState { values, .. } => values.len(),
        }
    }

    pub fn tail(&self) -> f64 {
        match self {
            ThresholdPolicy::Fixed(t) => *t,
            ThresholdPolicy::PerState { tail, .. } => *tail,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, ThresholdPolicy::Fixed(_))
    }

    /// Every threshold the receiver has to store, tail last.
    pub fn all_values(&self) -> Vec<f64> {
        match self {
            ThresholdPolicy::Fixed(t) => vec![*t],
            ThresholdPolicy::PerState { values, tail } => {
                let mut v = values.clone();
                v.push(*tail);
                v
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.all_values().iter().all(|t| *t > 0.0 && t.is_finite()) {
            Ok(())
        } else {
            Err(Error::domain("thresholds must be finite and > 0"))
        }
    }
}

/// Outcome of checking `0 <= sum_{j<=i} Delta_j <= B_M` for every prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub prefix_sums: Vec<f64>,
    /// `B_M - prefix_i`; negative where the storage bound is violated.
    pub upper_slack: Vec<f64>,
    /// `prefix_i`; negative where production time would be wasted.
    pub lower_slack: Vec<f64>,
    pub feasible: bool,
    /// 1-based prefix index of the first violation.
    pub first_violation: Option<usize>,
}

/// Absolute tolerance used when judging prefix feasibility.
pub fn feasibility_tolerance(storage: f64) -> f64 {
    1e-9 * storage.max(1.0)
}

pub fn validate_schedule(schedule: &IncrementSchedule, storage: f64) -> FeasibilityReport {
    let tol = feasibility_tolerance(storage);
    let mut prefix = 0.0;
    let mut prefix_sums = Vec::with_capacity(schedule.len());
    let mut upper_slack = Vec::with_capacity(schedule.len());
    let mut lower_slack = Vec::with_capacity(schedule.len());
    let mut first_violation = None;
    for (i, d) in schedule.deltas().iter().enumerate() {
        prefix += d;
        prefix_sums.push(prefix);
        upper_slack.push(storage - prefix);
        lower_slack.push(prefix);
        if first_violation.is_none() && (prefix > storage + tol || prefix < -tol) {
            first_violation = Some(i + 1);
        }
    }
    if schedule.is_empty() {
        prefix_sums.push(0.0);
        upper_slack.push(storage);
        lower_slack.push(0.0);
    }
    FeasibilityReport {
        prefix_sums,
        upper_slack,
        lower_slack,
        feasible: first_violation.is_none(),
        first_violation,
    }
}

/// Error contribution of one transmitter state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateError {
    /// Run-length `j` of state `s_j`; the last row aggregates every state
    /// from this index on.
    pub state: usize,
    pub probability: f64,
    /// `(P_{e|0} + P_{e|1}) / 2` conditioned on the state.
    pub conditional_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub pe_total: f64,
    pub pe_given_0: f64,
    pub pe_given_1: f64,
    pub per_state: Vec<StateError>,
    pub bounds: Option<(f64, f64)>,
    /// Prefix feasibility of the evaluated schedule, when one was evaluated.
    pub feasible: Option<bool>,
}

impl ErrorReport {
    pub(crate) fn from_conditionals(
        pe_given_0: f64,
        pe_given_1: f64,
        per_state: Vec<StateError>,
    ) -> Self {
        ErrorReport {
            pe_total: 0.5 * (pe_given_0 + pe_given_1),
            pe_given_0,
            pe_given_1,
            per_state,
            bounds: None,
            feasible: None,
        }
    }
}

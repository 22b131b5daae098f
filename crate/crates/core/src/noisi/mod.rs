//! The ISI-free schedule problem.
//!
//! Minimize `F(Delta) = sum_j 2^{-j} P_{e|1}(M + Delta_j)` over schedules with
//! every prefix sum in `[0, B_M]`. All routines here evaluate the ISI-free
//! link (`p_0 = 1`) and ignore `params.hitting`.

mod boundary;
mod bounds;
mod brute;
mod evaluate;
mod solver;

pub use boundary::{boundary_closed_form, boundary_sequence, BoundarySequence};
pub use bounds::{increment_count_bound, pe_bounds, CountBound};
pub use brute::{brute_force_schedule, BRUTE_FORCE_GUARD};
pub use evaluate::{objective, pe_schedule, pe_strategy1};
pub use solver::{solve_increments, KktCertificate};

pub(crate) use evaluate::pe_schedule_unchecked;

use crate::error::{Error, Result};
use crate::poisson::{decision_count, slope};

/// `|dP_{e|1}/dx|` for one decision count: `x -> pmf(n - 1, x + lambda)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SlopeCurve {
    pub n: u64,
    pub lambda: f64,
}

impl SlopeCurve {
    pub fn new(threshold: f64, lambda: f64) -> Self {
        SlopeCurve {
            n: decision_count(threshold),
            lambda,
        }
    }

    pub fn at(&self, x: f64) -> f64 {
        slope(self.n, x + self.lambda)
    }

    /// Start of the strictly decreasing branch (the pmf mode in `x`).
    pub fn branch_start(&self) -> f64 {
        self.n as f64 - 1.0 - self.lambda
    }

    pub fn require_decreasing_from(&self, x: f64) -> Result<()> {
        if x > self.branch_start() {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "x + lambda = {} must exceed decision count - 1 = {} (decreasing branch)",
                x + self.lambda,
                self.n as f64 - 1.0
            )))
        }
    }

    /// Solves `at(x) = level` for `x >= from` on the decreasing branch;
    /// needs `level <= at(from)`.
    pub fn invert(&self, level: f64, from: f64) -> Result<f64> {
        let top = self.at(from);
        if level >= top {
            return Ok(from);
        }
        if !(level > 0.0) {
            return Err(Error::numeric(
                "slope inversion",
                format!("level {level} not positive"),
            ));
        }
        let mut lo = from;
        let mut width = 1.0f64.max(from.abs());
        let mut hi = from + width;
        let mut guard = 0;
        while self.at(hi) > level {
            lo = hi;
            width *= 2.0;
            hi = from + width;
            guard += 1;
            if guard > 200 {
                return Err(Error::numeric(
                    "slope inversion",
                    format!("no bracket for level {level:e}"),
                ));
            }
        }
        // bisect to the last representable midpoint
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.at(mid) > level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

use serde::{Deserialize, Serialize};

use super::SlopeCurve;
use crate::error::{Error, Result};
use crate::lambert::{lambert_w, Branch};
use crate::params::SystemParams;
use crate::poisson::{decision_count, ln_poisson_pmf};
use crate::schedule::ThresholdPolicy;

const MAX_J: usize = 10_000;

/// Boundary points `a_1 >= ... >= a_{J+1}` bracketing the optimal increments.
///
/// `M + a_i` is where `|dP_{e|1}/dx|` has fallen to `2^{-(J-i+1)}` of its
/// value at `M`; `a_{J+1} = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySequence {
    /// `a[i-1] = a_i` for `i = 1..=J+1`.
    pub a: Vec<f64>,
    pub j: usize,
}

impl BoundarySequence {
    /// `a_i`, 1-based.
    pub fn get(&self, i: usize) -> f64 {
        self.a[i - 1]
    }
}

fn fixed_threshold(policy: &ThresholdPolicy) -> Result<f64> {
    match policy {
        ThresholdPolicy::Fixed(t) => Ok(*t),
        ThresholdPolicy::PerState { .. } => Err(Error::Unsupported(
            "boundary points are defined for a single fixed threshold".into(),
        )),
    }
}

/// Finds `J` from `sum_{j=2}^{J+1} a_j <= B_M <= sum_{j=1}^{J} a_j` and the
/// points by bisection on the decreasing branch of the derivative.
pub fn boundary_sequence(
    params: &SystemParams,
    policy: &ThresholdPolicy,
) -> Result<BoundarySequence> {
    params.validate_analytic()?;
    let t = fixed_threshold(policy)?;
    let m = params.m();
    let budget = params.storage();
    let curve = SlopeCurve::new(t, params.lambda);
    curve.require_decreasing_from(m)?;
    if budget == 0.0 {
        return Ok(BoundarySequence { a: vec![0.0], j: 0 });
    }
    let top = curve.at(m);
    // b[k]: offset where the derivative has halved k times; a_i = b[J - i + 1]
    let mut b = vec![0.0];
    let mut upper = 0.0;
    loop {
        let k = b.len();
        if k > MAX_J {
            return Err(Error::numeric(
                "boundary_sequence",
                format!("no bracketing J below {MAX_J} (partial sum {upper} of {budget})"),
            ));
        }
        let level = top * 0.5f64.powi(k as i32);
        let x = curve.invert(level, m)? - m;
        b.push(x);
        upper += x;
        if upper >= budget {
            break;
        }
    }
    let j = b.len() - 1;
    let a = (1..=j + 1).map(|i| b[j + 1 - i]).collect();
    Ok(BoundarySequence { a, j })
}

/// Lambert-W closed form for `a_i`.
///
/// With `n` the decision count and `y = M + a_i + lambda`, the boundary
/// condition reads `y^{n-1} e^{-y} = (M+lambda)^{n-1} e^{-(M+lambda)} 2^{-k}`
/// with `k = J - i + 1`, solved by the lower branch since `y > n - 1`.
pub fn boundary_closed_form(
    i: usize,
    j: usize,
    params: &SystemParams,
    policy: &ThresholdPolicy,
) -> Result<f64> {
    if i == 0 || i > j + 1 {
        return Err(Error::Precondition(format!(
            "need 1 <= i <= J + 1, got i = {i}, J = {j}"
        )));
    }
    let t = fixed_threshold(policy)?;
    let m = params.m();
    let lambda = params.lambda;
    let k = (j + 1 - i) as f64;
    let order = decision_count(t).saturating_sub(1) as f64;
    let y0 = m + lambda;
    if order == 0.0 {
        // pure exponential: y = y0 + k ln 2
        return Ok(k * std::f64::consts::LN_2);
    }
    let r = y0 / order;
    if r <= 1.0 {
        return Err(Error::numeric(
            "boundary_closed_form",
            format!("M + lambda = {y0} not beyond the mode {order}; no lower-branch root"),
        ));
    }
    // z = -(C^{1/n'}) / n' with C = n'! |P'(M)| 2^{-k}, written in log space
    let ln_c = ln_poisson_pmf(order as u64, y0) + statrs::function::gamma::ln_gamma(order + 1.0)
        - k * std::f64::consts::LN_2;
    let z = -(ln_c / order).exp() / order;
    let w = lambert_w(Branch::Lower, z).map_err(|e| {
        Error::numeric(
            "boundary_closed_form",
            format!("W_-1 failed for z = {z:e} (i = {i}, J = {j}): {e}"),
        )
    })?;
    Ok(-order * w - lambda - m)
}

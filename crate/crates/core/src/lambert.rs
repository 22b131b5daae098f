//! Real branches of the Lambert W function, `W(z) e^{W(z)} = z`.

use std::f64::consts::E;

use crate::error::{Error, Result};

const BRANCH_POINT: f64 = -1.0 / E;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Principal branch, `W >= -1`, defined on `[-1/e, inf)`.
    Principal,
    /// Lower branch, `W <= -1`, defined on `[-1/e, 0)`.
    Lower,
}

pub fn lambert_w(branch: Branch, z: f64) -> Result<f64> {
    if !z.is_finite() || z < BRANCH_POINT - 1e-15 {
        return Err(Error::numeric(
            "lambert_w",
            format!("argument {z} below -1/e"),
        ));
    }
    if branch == Branch::Lower && z >= 0.0 {
        return Err(Error::numeric(
            "lambert_w",
            format!("lower branch needs z < 0, got {z}"),
        ));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    // distance from the branch point drives the initial guess there
    let q = 2.0 * (1.0 + E * z);
    if q <= 0.0 {
        return Ok(-1.0);
    }
    let p = q.sqrt();
    let mut w = match branch {
        Branch::Principal if z < -0.25 => -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p,
        Branch::Principal if z < 3.0 => {
            (1.0 + z).ln() * (1.0 - (1.0 + z).ln().ln_1p() / (2.0 + (1.0 + z).ln()))
        }
        Branch::Principal => {
            let l1 = z.ln();
            let l2 = l1.ln();
            l1 - l2 + l2 / l1
        }
        Branch::Lower if z < -0.25 => -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p * p * p,
        Branch::Lower => {
            let l1 = (-z).ln();
            let l2 = (-l1).ln();
            l1 - l2 + l2 / l1
        }
    };
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            return Ok(w);
        }
    }
    let residual = w * w.exp() - z;
    if residual.abs() <= 1e-12 * z.abs().max(1e-300) {
        Ok(w)
    } else {
        Err(Error::numeric(
            "lambert_w",
            format!("no convergence at z = {z}, last w = {w}, residual = {residual}"),
        ))
    }
}

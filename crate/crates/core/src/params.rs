use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poisson::{decision_count, ml_fixed_threshold};

/// Physical and channel parameters of the link.
///
/// `M = beta * slot` molecules are produced per slot; the storage holds
/// `B_M = beta * (slot - release)` molecules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Production rate, molecules per second.
    pub beta: f64,
    /// Slot duration `T`, seconds.
    pub slot: f64,
    /// Non-adaptive release duration `T_M`, seconds.
    pub release: f64,
    /// Background noise mean, molecules per slot.
    pub lambda: f64,
    /// Hitting probabilities `p_0, p_1, ...`; entry `k` is the fraction of a
    /// release absorbed `k` slots later.
    pub hitting: Vec<f64>,
}

impl SystemParams {
    pub fn new(beta: f64, slot: f64, release: f64, lambda: f64, hitting: Vec<f64>) -> Result<Self> {
        let p = SystemParams {
            beta,
            slot,
            release,
            lambda,
            hitting,
        };
        p.validate()?;
        Ok(p)
    }

    /// beta = 2 molecules/s, T = 25 s, T_M = 4 s, no ISI.
    pub fn reference(lambda: f64) -> Self {
        SystemParams {
            beta: 2.0,
            slot: 25.0,
            release: 4.0,
            lambda,
            hitting: vec![1.0],
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        SystemParams {
            lambda,
            ..self.clone()
        }
    }

    pub fn with_hitting(&self, hitting: Vec<f64>) -> Self {
        SystemParams {
            hitting,
            ..self.clone()
        }
    }

    /// Keeps `M` fixed and moves `T_M` so that the storage equals `b_m`.
    ///
    /// Capacities at or above `M` give `T_M <= 0`. Such parameter sets pass
    /// [`SystemParams::validate_analytic`] but not [`SystemParams::validate`]:
    /// the storage no longer refills within one "0" slot, so only the
    /// schedule optimization (not the slot simulator) is meaningful for them.
    pub fn with_storage(&self, b_m: f64) -> Self {
        SystemParams {
            release: self.slot - b_m / self.beta,
            ..self.clone()
        }
    }

    /// Molecules produced per slot, `M = beta * T`.
    pub fn m(&self) -> f64 {
        self.beta * self.slot
    }

    /// Storage capacity `B_M = beta * (T - T_M)`.
    pub fn storage(&self) -> f64 {
        let b = self.beta * (self.slot - self.release);
        if b.abs() < 1e-12 * self.m().max(1.0) {
            0.0
        } else {
            b
        }
    }

    pub fn p(&self, k: usize) -> f64 {
        self.hitting.get(k).copied().unwrap_or(0.0)
    }

    /// Channel memory: index of the last nonzero hitting probability.
    pub fn memory(&self) -> usize {
        self.hitting.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    /// ML threshold for the no-ISI reception of `M` molecules.
    pub fn fixed_threshold(&self) -> Result<f64> {
        ml_fixed_threshold(self.m(), self.lambda)
    }

    /// Checks everything the analytic routines rely on; allows `B_M = 0`
    /// and `B_M >= M`.
    pub fn validate_analytic(&self) -> Result<()> {
        let finite = [self.beta, self.slot, self.release, self.lambda]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::domain("parameters must be finite"));
        }
        if !(self.beta > 0.0) {
            return Err(Error::domain(format!(
                "beta must be > 0, got {}",
                self.beta
            )));
        }
        if !(self.slot > 0.0) {
            return Err(Error::domain(format!(
                "slot duration must be > 0, got {}",
                self.slot
            )));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::domain(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if self.storage() < 0.0 {
            return Err(Error::domain(format!(
                "release duration {} exceeds slot duration {}",
                self.release, self.slot
            )));
        }
        if self.hitting.is_empty() {
            return Err(Error::domain("at least p_0 is required"));
        }
        if self.hitting.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::domain("hitting probabilities must be >= 0"));
        }
        if !(self.hitting[0] > 0.0) {
            return Err(Error::domain("p_0 must be > 0"));
        }
        let total: f64 = self.hitting.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::domain(format!(
                "hitting probabilities sum to {total} > 1"
            )));
        }
        let t = self.fixed_threshold()?;
        let n = decision_count(t) as f64;
        if !(self.m() + self.lambda > n - 1.0) {
            return Err(Error::domain(format!(
                "M + lambda = {} does not exceed the decision count {n} - 1",
                self.m() + self.lambda
            )));
        }
        Ok(())
    }

    /// Full physical validation: `0 < T_M < T`, hence `0 < B_M < beta T`.
    pub fn validate(&self) -> Result<()> {
        self.validate_analytic()?;
        if !(self.release > 0.0 && self.release < self.slot) {
            return Err(Error::domain(format!(
                "need 0 < T_M < T, got T_M = {} and T = {}",
                self.release, self.slot
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_derived_values() {
        let p = SystemParams::reference(15.0);
        assert_eq!(p.m(), 50.0);
        assert_eq!(p.storage(), 42.0);
        assert_eq!(p.memory(), 0);
        p.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        assert!(SystemParams::new(0.0, 25.0, 4.0, 15.0, vec![1.0]).is_err());
        assert!(SystemParams::new(2.0, 25.0, 26.0, 15.0, vec![1.0]).is_err());
        assert!(SystemParams::new(2.0, 25.0, 0.0, 15.0, vec![1.0]).is_err());
        assert!(SystemParams::new(2.0, 25.0, 4.0, 0.0, vec![1.0]).is_err());
        assert!(SystemParams::new(2.0, 25.0, 4.0, 15.0, vec![0.0, 1.0]).is_err());
        assert!(SystemParams::new(2.0, 25.0, 4.0, 15.0, vec![0.7, 0.4]).is_err());
        assert!(SystemParams::new(2.0, 25.0, 4.0, 15.0, vec![0.9, -0.1]).is_err());
    }

    #[test]
    fn storage_sweep_relaxes_only_physical_check() {
        let p = SystemParams::reference(15.0).with_storage(80.0);
        assert_eq!(p.m(), 50.0);
        assert!((p.storage() - 80.0).abs() < 1e-12);
        p.validate_analytic().unwrap();
        assert!(p.validate().is_err());
        let z = SystemParams::reference(15.0).with_storage(0.0);
        assert_eq!(z.storage(), 0.0);
        z.validate_analytic().unwrap();
    }

    #[test]
    fn memory_ignores_trailing_zeros() {
        let p = SystemParams::reference(15.0).with_hitting(vec![0.85, 0.1, 0.05, 0.0]);
        assert_eq!(p.memory(), 2);
    }
}

//! Stationary laws of finite Markov chains.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Row-stochastic transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub rows: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    pub fn zeros(n: usize) -> Self {
        TransitionMatrix {
            rows: vec![vec![0.0; n]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn max_row_defect(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `pi * P` for a row vector `pi`.
    pub fn left_apply(&self, pi: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                out[j] += pi[i] * p;
            }
        }
        out
    }

    /// Solves `pi P = pi`, `sum(pi) = 1` by LU on `(P^T - I)` with the last
    /// equation replaced by normalization.
    pub fn stationary(&self) -> Result<Vec<f64>> {
        let n = self.len();
        if n == 0 {
            return Err(Error::numeric("stationary", "empty chain"));
        }
        let defect = self.max_row_defect();
        if defect > 1e-12 {
            return Err(Error::numeric(
                "stationary",
                format!("rows deviate from 1 by {defect:e}"),
            ));
        }
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(j, i)] = self.rows[i][j];
            }
            a[(i, i)] -= 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(n);
        b[n - 1] = 1.0;
        let pi = a.lu().solve(&b).ok_or_else(|| {
            Error::numeric("stationary", "singular system (chain not irreducible?)")
        })?;
        let pi: Vec<f64> = pi
            .iter()
            .map(|v| if v.abs() < 1e-300 { 0.0 } else { *v })
            .collect();
        if pi.iter().any(|v| *v < -1e-12 || !v.is_finite()) {
            return Err(Error::numeric("stationary", "solution has negative mass"));
        }
        Ok(pi)
    }
}

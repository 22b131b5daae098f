//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Every key is optional and
//! defaults to the reference link (beta 2, T 25 s, T_M 4 s, lambda 15, no
//! ISI). Recognised keys:
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `beta` | production rate | 2 |
//! | `T` | slot duration | 25 |
//! | `T_M` | release duration | 4 |
//! | `lambda` | noise mean (fixed axes) | 15 |
//! | `hitting` | `p_0, p_1, ...` | 1 |
//! | `strategies` | comma list of S1..S6 | S1,S2,S3,S4 |
//! | `axis` | `lambda`, `B_M` or `k` | lambda |
//! | `grid` | `a,b,c` or `start:step:end` | 3:2:15 |
//! | `series` | extra lambda values, one sweep each | empty |
//! | `mc_slots` | Monte Carlo slots per row, 0 disables | 0 |
//! | `seed` | Monte Carlo seed | 1 |
//! | `output` | output path | stdout |
//! | `format` | `csv` or `json` | csv |

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::strategy::Strategy;

/// Smallest Monte Carlo run accepted when simulation columns are requested.
pub const MIN_MC_SLOTS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    Lambda,
    Storage,
    /// Truncation index of the strategy-5 bounds.
    Truncation,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Lambda => "lambda",
            Axis::Storage => "B_M",
            Axis::Truncation => "k",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lambda" => Ok(Axis::Lambda),
            "b_m" | "bm" | "storage" => Ok(Axis::Storage),
            "k" | "truncation" => Ok(Axis::Truncation),
            _ => Err(Error::Config(format!("unknown sweep axis '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown format '{s}'"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: SystemParams,
    pub strategies: Vec<Strategy>,
    pub axis: Axis,
    pub grid: Vec<f64>,
    /// Each value reruns the sweep at that lambda; empty means `params.lambda`.
    pub series: Vec<f64>,
    pub mc_slots: u64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            params: SystemParams::reference(15.0),
            strategies: vec![Strategy::S1, Strategy::S2, Strategy::S3, Strategy::S4],
            axis: Axis::Lambda,
            grid: vec![3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 15.0],
            series: Vec::new(),
            mc_slots: 0,
            seed: 1,
            output: None,
            format: Format::Csv,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: '{v}' is not a number")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(key, s))
        .collect()
}

/// `a,b,c` or `start:step:end` (end included when hit within rounding).
pub fn parse_grid(v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').collect();
    match parts.as_slice() {
        [one] => parse_list("grid", one),
        [a, s, b] => {
            let (a, s, b) = (
                parse_f64("grid", a)?,
                parse_f64("grid", s)?,
                parse_f64("grid", b)?,
            );
            if !(s > 0.0) || !(b >= a) {
                return Err(Error::Config(format!(
                    "grid range '{v}' needs step > 0 and end >= start"
                )));
            }
            let n = ((b - a) / s + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| a + i as f64 * s).collect())
        }
        _ => Err(Error::Config(format!(
            "grid '{v}' is neither a list nor start:step:end"
        ))),
    }
}

fn list_text(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    /// Parses the key-value text, then validates.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            c.set(k.trim(), v.trim())?;
        }
        c.validate()?;
        Ok(c)
    }

    /// Applies one key; also used for command-line overrides.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "beta" => self.params.beta = parse_f64(key, v)?,
            "T" | "slot" => self.params.slot = parse_f64(key, v)?,
            "T_M" | "release" => self.params.release = parse_f64(key, v)?,
            "lambda" => self.params.lambda = parse_f64(key, v)?,
            "hitting" => self.params.hitting = parse_list(key, v)?,
            "strategies" => {
                self.strategies = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(Strategy::from_str)
                    .collect::<Result<_>>()?
            }
            "axis" => self.axis = v.parse()?,
            "grid" => self.grid = parse_grid(v)?,
            "series" => self.series = parse_list(key, v)?,
            "mc_slots" => {
                self.mc_slots = v
                    .parse()
                    .map_err(|_| Error::Config(format!("mc_slots: '{v}' is not a count")))?
            }
            "seed" => {
                self.seed = v
                    .parse()
                    .map_err(|_| Error::Config(format!("seed: '{v}' is not a 64-bit integer")))?
            }
            "output" => self.output = (!v.is_empty()).then(|| PathBuf::from(v)),
            "format" => self.format = v.parse()?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::Config("no strategies selected".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::Config("grid is empty".into()));
        }
        if self.grid.iter().any(|v| !v.is_finite()) || self.grid.windows(2).any(|w| !(w[1] > w[0]))
        {
            return Err(Error::Config(
                "grid must be finite and strictly increasing".into(),
            ));
        }
        if self.axis == Axis::Truncation && self.grid.iter().any(|k| *k < 1.0 || k.fract() != 0.0) {
            return Err(Error::Config("truncation grid needs integers >= 1".into()));
        }
        if self.mc_slots != 0 && self.mc_slots < MIN_MC_SLOTS {
            return Err(Error::Config(format!(
                "mc_slots must be 0 or >= {MIN_MC_SLOTS}, got {}",
                self.mc_slots
            )));
        }
        self.params
            .validate_analytic()
            .map_err(|e| Error::Config(format!("params: {e}")))
    }

    /// Canonical key-value text of everything that affects the results
    /// (the output path is left out).
    pub fn canonical(&self) -> String {
        let p = &self.params;
        let strategies = self
            .strategies
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "beta = {}\nT = {}\nT_M = {}\nlambda = {}\nhitting = {}\nstrategies = {}\naxis = {}\ngrid = {}\nseries = {}\nmc_slots = {}\nseed = {}\nformat = {}\n",
            p.beta,
            p.slot,
            p.release,
            p.lambda,
            list_text(&p.hitting),
            strategies,
            self.axis,
            list_text(&self.grid),
            list_text(&self.series),
            self.mc_slots,
            self.seed,
            self.format
        )
    }

    /// SHA-256 of [`ExperimentConfig::canonical`], hex.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_reference() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.params.m(), 50.0);
        assert_eq!(c.params.storage(), 42.0);
    }

    #[test]
    fn parses_keys_and_comments() {
        let c = ExperimentConfig::parse(
            "# one-slot ISI\nhitting = 0.9, 0.1\nstrategies = S1,s5, 6\naxis = B_M\ngrid = 10:10:80 # capacities\nmc_slots = 20000\nseed = 42\nformat = json\n",
        )
        .unwrap();
        assert_eq!(c.params.hitting, vec![0.9, 0.1]);
        assert_eq!(c.strategies, vec![Strategy::S1, Strategy::S5, Strategy::S6]);
        assert_eq!(c.axis, Axis::Storage);
        assert_eq!(c.grid, (1..=8).map(|i| 10.0 * i as f64).collect::<Vec<_>>());
        assert_eq!((c.mc_slots, c.seed, c.format), (20_000, 42, Format::Json));
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "strategies = S7",
            "grid = 3,3",
            "grid = 5,3",
            "grid =",
            "mc_slots = 500",
            "axis = time",
            "colour = red",
            "lambda",
            "axis = k\ngrid = 0.5,1",
            "hitting = 0.7,0.4",
        ] {
            assert!(
                matches!(ExperimentConfig::parse(text), Err(Error::Config(_))),
                "accepted {text:?}"
            );
        }
    }

    #[test]
    fn hash_ignores_output_only() {
        let a = ExperimentConfig::parse("output = a.csv").unwrap();
        let b = ExperimentConfig::parse("output = b.csv").unwrap();
        let c = ExperimentConfig::parse("seed = 2").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn canonical_round_trips() {
        let c = ExperimentConfig::parse(
            "hitting = 0.85,0.1,0.05\nseries = 3,7\naxis = B_M\ngrid = 10,20",
        )
        .unwrap();
        assert_eq!(ExperimentConfig::parse(&c.canonical()).unwrap(), c);
    }
}

//! Parameter sweeps, strategy comparisons and figure datasets.
//!
//! Everything here is bookkeeping around library calls: each number in a
//! dataset row can be recomputed from [`StrategySpec::build`],
//! [`analytic_pe`], the bound routines and [`simulate_with`].

mod config;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{parse_grid, Axis, ExperimentConfig, Format, MIN_MC_SLOTS};

use crate::error::{Error, Result};
use crate::isi::strategy5_pe_bounds_1isi;
use crate::noisi::increment_count_bound;
use crate::params::SystemParams;
use crate::schedule::ThresholdPolicy;
use crate::sim::{simulate_with, SimOptions};
use crate::strategy::{analytic_pe, Strategy, StrategySpec};

/// Bumped whenever the dataset columns change.
pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 16] = [
    "axis",
    "value",
    "lambda",
    "B_M",
    "strategy",
    "pe",
    "lower",
    "upper",
    "mc_ber",
    "mc_ci",
    "mc_errors",
    "mc_violations",
    "J",
    "N_bound",
    "feasible",
    "status",
];

/// One (sweep point, strategy) result. Empty fields are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    pub lambda: f64,
    pub b_m: f64,
    pub strategy: Strategy,
    pub pe: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub mc_ber: Option<f64>,
    pub mc_ci: Option<f64>,
    pub mc_errors: Option<u64>,
    pub mc_violations: Option<u64>,
    /// Number of positive increments.
    pub j: Option<usize>,
    /// Integer increment-count bound of the fixed-threshold problem.
    pub n_bound: Option<usize>,
    pub feasible: Option<bool>,
    /// `ok`, or `error: ...` (`mc-error: ...` when only the simulation failed).
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    /// The analytic value when there is one, else the simulated BER.
    pub fn best_estimate(&self) -> Option<f64> {
        self.pe.or(self.mc_ber)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub tool_version: String,
    pub schema: u32,
    pub config_hash: String,
    pub rows: Vec<SweepRow>,
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl Dataset {
    pub fn header_comment(&self) -> String {
        format!(
            "# ardm {} schema={} config_sha256={}",
            self.tool_version, self.schema, self.config_hash
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header_comment();
        out.push('\n');
        out.push_str(&CSV_COLUMNS.join(","));
        out.push('\n');
        for r in &self.rows {
            let fields = [
                r.axis.to_string(),
                r.value.to_string(),
                r.lambda.to_string(),
                r.b_m.to_string(),
                r.strategy.to_string(),
                num(r.pe),
                num(r.lower),
                num(r.upper),
                num(r.mc_ber),
                num(r.mc_ci),
                opt(&r.mc_errors),
                opt(&r.mc_violations),
                opt(&r.j),
                opt(&r.n_bound),
                opt(&r.feasible),
                r.status.replace([',', '\n'], ";"),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes") + "\n"
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn rows_for(&self, s: Strategy) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.strategy == s)
    }
}

struct Point {
    series: usize,
    index: usize,
    value: f64,
    params: SystemParams,
}

fn points(config: &ExperimentConfig) -> Vec<Point> {
    let series = if config.series.is_empty() || config.axis == Axis::Lambda {
        vec![config.params.lambda]
    } else {
        config.series.clone()
    };
    let mut out = Vec::new();
    for (si, lambda) in series.iter().enumerate() {
        let base = config.params.with_lambda(*lambda);
        for (index, &value) in config.grid.iter().enumerate() {
            let params = match config.axis {
                Axis::Lambda => base.with_lambda(value),
                Axis::Storage => base.with_storage(value),
                Axis::Truncation => base.clone(),
            };
            out.push(Point {
                series: si,
                index,
                value,
                params,
            });
        }
    }
    out
}

fn error_status(e: &Error) -> String {
    format!("error: {e}")
}

fn evaluate_row(
    config: &ExperimentConfig,
    point: &Point,
    strategy: Strategy,
    seed: u64,
) -> SweepRow {
    let p = &point.params;
    let mut row = SweepRow {
        axis: config.axis,
        value: point.value,
        lambda: p.lambda,
        b_m: p.storage(),
        strategy,
        pe: None,
        lower: None,
        upper: None,
        mc_ber: None,
        mc_ci: None,
        mc_errors: None,
        mc_violations: None,
        j: None,
        n_bound: None,
        feasible: None,
        status: "ok".into(),
    };
    let spec = match StrategySpec::build(strategy, p) {
        Ok(s) => s,
        Err(e) => {
            row.status = error_status(&e);
            return row;
        }
    };
    row.j = Some(spec.schedule.positive_count());
    let analytic = analytic_pe(&spec, p).and_then(|mut a| {
        if config.axis == Axis::Truncation && strategy == Strategy::S5 && p.memory() <= 1 {
            a.bounds = Some(strategy5_pe_bounds_1isi(p, point.value as usize)?);
        }
        Ok(a)
    });
    match analytic {
        Ok(a) => {
            row.pe = a.pe;
            row.lower = a.bounds.map(|b| b.0);
            row.upper = a.bounds.map(|b| b.1);
            row.feasible = Some(a.feasible);
        }
        Err(e) => row.status = error_status(&e),
    }
    if p.memory() == 0 && matches!(strategy, Strategy::S2 | Strategy::S3 | Strategy::S4) {
        let bound = p
            .fixed_threshold()
            .and_then(|t| increment_count_bound(p, &ThresholdPolicy::Fixed(t)));
        match bound {
            Ok(b) => row.n_bound = Some(b.bound),
            Err(e) if row.is_ok() => row.status = error_status(&e),
            Err(_) => {}
        }
    }
    if config.mc_slots > 0 {
        // sub-optimal ISI schedules overspend by design; count instead of failing
        let opts = SimOptions {
            allow_infeasible: row.feasible == Some(false),
            ..SimOptions::default()
        };
        match simulate_with(&spec, p, config.mc_slots, seed, &opts) {
            Ok(r) => {
                row.mc_ber = Some(r.ber);
                row.mc_ci = Some(r.ci_half_width);
                row.mc_errors = Some(r.errors);
                row.mc_violations = Some(r.feasibility_violations);
            }
            Err(e) if row.is_ok() => row.status = format!("mc-{}", error_status(&e)),
            Err(_) => {}
        }
    }
    row
}

/// Evaluates every (sweep point, strategy) pair in parallel.
///
/// All strategies at one sweep point share the seed `config.seed + point
/// index`, so their simulated BERs use common random bits. Rows come back
/// ordered by series, sweep value and strategy regardless of scheduling.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Dataset> {
    config.validate()?;
    let pts = points(config);
    let n_grid = config.grid.len();
    let jobs: Vec<(&Point, Strategy)> = pts
        .iter()
        .flat_map(|pt| config.strategies.iter().map(move |s| (pt, *s)))
        .collect();
    let mut rows: Vec<((usize, usize, Strategy), SweepRow)> = jobs
        .par_iter()
        .map(|(pt, s)| {
            let seed = config
                .seed
                .wrapping_add((pt.series * n_grid + pt.index) as u64);
            (
                (pt.series, pt.index, *s),
                evaluate_row(config, pt, *s, seed),
            )
        })
        .collect();
    rows.sort_by_key(|r| r.0);
    Ok(Dataset {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        schema: SCHEMA_VERSION,
        config_hash: config.hash(),
        rows: rows.into_iter().map(|(_, r)| r).collect(),
    })
}

/// Chains expected to be ordered best first for a channel memory.
pub fn expected_chains(memory: usize) -> &'static [&'static [Strategy]] {
    use Strategy::*;
    if memory == 0 {
        &[&[S4, S3, S2, S1, S5], &[S4, S6, S2]]
    } else {
        &[&[S4, S6, S1, S5]]
    }
}

/// Every pair `(a, b)` with `a` before `b` in some expected chain, so a
/// missing strategy does not hide a violation between its neighbours.
pub fn expected_order(memory: usize) -> Vec<(Strategy, Strategy)> {
    let mut pairs = Vec::new();
    for chain in expected_chains(memory) {
        for (i, a) in chain.iter().enumerate() {
            for b in &chain[i + 1..] {
                if !pairs.contains(&(*a, *b)) {
                    pairs.push((*a, *b));
                }
            }
        }
    }
    pairs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub lambda: f64,
    pub value: f64,
    /// Strategies sorted by error probability, best first.
    pub ranking: Vec<(Strategy, f64)>,
    /// `pe_a / pe_b` for every ordered pair `a < b` present.
    pub ratios: Vec<(Strategy, Strategy, f64)>,
    /// `pe_S6 / pe_S4 - 1` when both are present.
    pub gap_s6_s4: Option<f64>,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub config_hash: String,
    pub memory: usize,
    pub rows: Vec<ComparisonRow>,
    pub violation_count: usize,
    /// Rows whose evaluation failed, as `strategy@value: status`.
    pub failed: Vec<String>,
}

/// Relative slack for ties in the ordering check.
const ORDER_SLACK: f64 = 1e-12;

pub fn compare(config: &ExperimentConfig) -> Result<Comparison> {
    let data = run_sweep(config)?;
    Ok(compare_dataset(&data, config.params.memory()))
}

pub fn compare_dataset(data: &Dataset, memory: usize) -> Comparison {
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    let mut i = 0;
    while i < data.rows.len() {
        let key = (data.rows[i].lambda.to_bits(), data.rows[i].value.to_bits());
        let mut group = Vec::new();
        while i < data.rows.len()
            && (data.rows[i].lambda.to_bits(), data.rows[i].value.to_bits()) == key
        {
            let r = &data.rows[i];
            if !r.is_ok() {
                failed.push(format!("{}@{}: {}", r.strategy, r.value, r.status));
            }
            if let Some(v) = r.best_estimate() {
                group.push((r.strategy, v));
            }
            i += 1;
        }
        let get = |s: Strategy| group.iter().find(|g| g.0 == s).map(|g| g.1);
        let violations = expected_order(memory)
            .into_iter()
            .filter_map(|(a, b)| match (get(a), get(b)) {
                (Some(x), Some(y)) if x > y * (1.0 + ORDER_SLACK) => {
                    Some(format!("{a} ({x:e}) > {b} ({y:e})"))
                }
                _ => None,
            })
            .collect::<Vec<_>>();
        let mut ratios = Vec::new();
        for (k, a) in group.iter().enumerate() {
            for b in &group[k + 1..] {
                ratios.push((a.0, b.0, a.1 / b.1));
            }
        }
        let gap_s6_s4 = match (get(Strategy::S6), get(Strategy::S4)) {
            (Some(x), Some(y)) => Some(x / y - 1.0),
            _ => None,
        };
        let mut ranking = group;
        ranking.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let first = &data.rows[i - 1];
        rows.push(ComparisonRow {
            lambda: first.lambda,
            value: first.value,
            ranking,
            ratios,
            gap_s6_s4,
            violations,
        });
    }
    Comparison {
        config_hash: data.config_hash.clone(),
        memory,
        violation_count: rows.iter().map(|r| r.violations.len()).sum(),
        rows,
        failed,
    }
}

impl Comparison {
    /// Plain-text table: one line per sweep point.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# config_sha256={} memory={}",
            self.config_hash, self.memory
        );
        let _ = writeln!(out, "lambda\tvalue\tranking\tgap_S6_S4\tviolations");
        for r in &self.rows {
            let ranking = r
                .ranking
                .iter()
                .map(|(s, v)| format!("{s}={v:.3e}"))
                .collect::<Vec<_>>()
                .join(" < ");
            let gap = r
                .gap_s6_s4
                .map(|g| format!("{g:.4}"))
                .unwrap_or_else(|| "-".into());
            let viol = if r.violations.is_empty() {
                "none".to_string()
            } else {
                r.violations.join("; ")
            };
            let _ = writeln!(out, "{}\t{}\t{ranking}\t{gap}\t{viol}", r.lambda, r.value);
        }
        for f in &self.failed {
            let _ = writeln!(out, "# failed {f}");
        }
        let _ = writeln!(out, "# ordering violations: {}", self.violation_count);
        out
    }
}

pub const FIGURES: [&str; 5] = ["fig4", "fig5", "fig6", "fig7", "fig8"];

/// Default Monte Carlo slots for the figure presets.
pub const FIGURE_MC_SLOTS: u64 = 100_000;

/// Preset configuration for one of the figure datasets.
///
/// * `fig4`: error probability versus lambda, strategies 1 to 4 plus bounds.
/// * `fig5`: versus storage capacity at lambda 15.
/// * `fig6`: increment-count bound versus storage for lambda 3, 7, 11, 15.
/// * `fig7`: one-slot ISI (p = 0.9, 0.1), strategies 1, 4, 5, 6.
/// * `fig8`: two-slot ISI (p = 0.85, 0.1, 0.05), strategies 1, 4, 5, 6.
pub fn figure_config(name: &str) -> Result<ExperimentConfig> {
    use Strategy::*;
    let base = ExperimentConfig {
        mc_slots: FIGURE_MC_SLOTS,
        ..ExperimentConfig::default()
    };
    let lambda_grid = vec![3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 15.0];
    let storage_grid: Vec<f64> = (1..=8).map(|i| 10.0 * i as f64).collect();
    let c = match name {
        "fig4" => ExperimentConfig {
            strategies: vec![S1, S2, S3, S4],
            grid: lambda_grid,
            ..base
        },
        "fig5" => ExperimentConfig {
            strategies: vec![S1, S2, S3, S4],
            axis: Axis::Storage,
            grid: storage_grid,
            ..base
        },
        "fig6" => ExperimentConfig {
            strategies: vec![S2],
            axis: Axis::Storage,
            grid: storage_grid,
            series: vec![3.0, 7.0, 11.0, 15.0],
            mc_slots: 0,
            ..base
        },
        "fig7" | "fig8" => {
            let hitting = if name == "fig7" {
                vec![0.9, 0.1]
            } else {
                vec![0.85, 0.1, 0.05]
            };
            ExperimentConfig {
                params: base.params.with_hitting(hitting),
                strategies: vec![S1, S4, S5, S6],
                grid: lambda_grid,
                ..base
            }
        }
        _ => {
            return Err(Error::Config(format!(
                "unknown figure '{name}' (expected one of {})",
                FIGURES.join(", ")
            )))
        }
    };
    c.validate()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig::parse("strategies = S1,S2,S4\ngrid = 5,15\nmc_slots = 10000\nseed = 3")
            .unwrap()
    }

    #[test]
    fn rows_are_ordered_and_complete() {
        let d = run_sweep(&small()).unwrap();
        assert_eq!(d.rows.len(), 6);
        let keys: Vec<_> = d.rows.iter().map(|r| (r.value, r.strategy)).collect();
        assert_eq!(keys[0], (5.0, Strategy::S1));
        assert_eq!(keys[5], (15.0, Strategy::S4));
        assert!(d.rows.iter().all(|r| r.is_ok() && r.mc_ber.is_some()));
        let s2 = d.rows_for(Strategy::S2).next().unwrap();
        let (lo, hi) = (s2.lower.unwrap(), s2.upper.unwrap());
        assert!(lo <= s2.pe.unwrap() && s2.pe.unwrap() <= hi);
        assert!(s2.n_bound.unwrap() >= s2.j.unwrap());
    }

    #[test]
    fn csv_layout() {
        let d = run_sweep(&small()).unwrap();
        let csv = d.to_csv();
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("# ardm "));
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        assert!(lines.all(|l| l.split(',').count() == CSV_COLUMNS.len()));
        assert_eq!(run_sweep(&small()).unwrap().to_csv(), csv);
    }

    #[test]
    fn failed_rows_are_flagged_and_run_continues() {
        // B_M = 60 exceeds M: analytic values exist, the simulator refuses
        let c = ExperimentConfig::parse(
            "strategies = S1,S2\naxis = B_M\ngrid = 20,60\nmc_slots = 10000",
        )
        .unwrap();
        let d = run_sweep(&c).unwrap();
        assert_eq!(d.rows.len(), 4);
        assert!(d.rows[..2].iter().all(SweepRow::is_ok));
        assert!(d.rows[2..]
            .iter()
            .all(|r| r.status.starts_with("mc-error: domain error") && r.pe.is_some()));
    }

    #[test]
    fn comparison_detects_violations() {
        let mut d = run_sweep(&small()).unwrap();
        assert_eq!(compare_dataset(&d, 0).violation_count, 0);
        d.rows[2].pe = Some(1.0); // S4 at lambda 5 worse than S1
        let c = compare_dataset(&d, 0);
        assert_eq!(c.violation_count, 2);
        assert!(c.to_table().contains("S4 (1e0) > S2"));
        assert_eq!(expected_order(1).len(), 6);
    }

    #[test]
    fn figure_presets() {
        for f in FIGURES {
            figure_config(f).unwrap();
        }
        assert!(matches!(figure_config("fig9"), Err(Error::Config(_))));
        assert_eq!(figure_config("fig8").unwrap().params.memory(), 2);
    }

    #[test]
    fn series_multiplies_storage_sweeps() {
        let c = ExperimentConfig::parse("strategies = S2\naxis = B_M\ngrid = 10,20\nseries = 3,15")
            .unwrap();
        let d = run_sweep(&c).unwrap();
        let lambdas: Vec<f64> = d.rows.iter().map(|r| r.lambda).collect();
        assert_eq!(lambdas, vec![3.0, 3.0, 15.0, 15.0]);
    }
}

//! `ardm`: solve, evaluate, simulate and sweep release-duration strategies.
//!
//! Every subcommand accepts the experiment keys as flags (`--lambda`,
//! `--hitting 0.9,0.1`, ...), a key-value `--config` file, and generic
//! `--set key=value` overrides. Flags win over `--set`, which wins over the
//! file. Results go to stdout (or `--output`); failures print a JSON error
//! record on stderr and exit nonzero.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use ardm::experiment::{compare_dataset, figure_config, run_sweep, ExperimentConfig, Format};
use ardm::isi::strategy5_pe_bounds_1isi;
use ardm::noisi::{boundary_sequence, increment_count_bound, pe_bounds, solve_increments};
use ardm::sim::{format_trace, replay_trace_with, simulate_with, SimOptions};
use ardm::strategy::{analytic_pe, Strategy, StrategySpec};
use ardm::{Error, Result, ThresholdPolicy};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "ardm",
    version,
    about = "Adaptive release-duration modulation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal increments under the fixed threshold, with the KKT certificate.
    Solve(Common),
    /// Error-probability bounds and boundary points.
    Bounds {
        #[command(flatten)]
        common: Common,
        /// Truncation index of the strategy-5 bounds (one-slot ISI only).
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// Builds one strategy and reports its analytic error probability.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "S4")]
        strategy: Strategy,
    },
    /// Monte Carlo simulation of one strategy.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "S1")]
        strategy: Strategy,
        /// Counted slots (overrides mc_slots).
        #[arg(long, default_value_t = 1_000_000)]
        slots: u64,
        /// Receiver knows the true state.
        #[arg(long)]
        genie: bool,
        /// Count storage violations instead of failing.
        #[arg(long)]
        allow_infeasible: bool,
        /// Also write the per-slot event log (tab-separated) here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Parameter sweep dataset.
    Sweep(Common),
    /// Strategy ordering table with violation flags.
    Compare(Common),
    /// Regenerates a figure dataset (fig4 .. fig8).
    Figure {
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Default)]
struct Common {
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Generic override, repeatable: --set key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    beta: Option<String>,
    /// Slot duration T.
    #[arg(long)]
    slot: Option<String>,
    /// Release duration T_M.
    #[arg(long)]
    release: Option<String>,
    /// Storage capacity B_M (moves T_M, keeps M).
    #[arg(long)]
    storage: Option<f64>,
    #[arg(long)]
    lambda: Option<String>,
    /// Hitting probabilities p_0,p_1,...
    #[arg(long)]
    hitting: Option<String>,
    /// Comma list of strategies.
    #[arg(long)]
    strategies: Option<String>,
    /// lambda, B_M or k.
    #[arg(long)]
    axis: Option<String>,
    /// a,b,c or start:step:end.
    #[arg(long)]
    grid: Option<String>,
    /// Extra lambda values for storage or truncation sweeps.
    #[arg(long)]
    series: Option<String>,
    #[arg(long)]
    mc_slots: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    output: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
}

impl Common {
    fn apply(&self, mut c: ExperimentConfig) -> Result<ExperimentConfig> {
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            c = ExperimentConfig::parse(&text)?;
        }
        for kv in &self.sets {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects key=value, got '{kv}'")))?;
            c.set(k.trim(), v.trim())?;
        }
        let flags = [
            ("beta", &self.beta),
            ("T", &self.slot),
            ("T_M", &self.release),
            ("lambda", &self.lambda),
            ("hitting", &self.hitting),
            ("strategies", &self.strategies),
            ("axis", &self.axis),
            ("grid", &self.grid),
            ("series", &self.series),
            ("mc_slots", &self.mc_slots),
            ("seed", &self.seed),
            ("output", &self.output),
            ("format", &self.format),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                c.set(k, v)?;
            }
        }
        if let Some(b) = self.storage {
            c.params = c.params.with_storage(b);
        }
        c.validate()?;
        Ok(c)
    }

    fn config(&self) -> Result<ExperimentConfig> {
        self.apply(ExperimentConfig::default())
    }
}

fn emit(config: &ExperimentConfig, text: &str) -> Result<()> {
    match &config.output {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value") + "\n"
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(common) => {
            let c = common.config()?;
            let policy = ThresholdPolicy::Fixed(c.params.fixed_threshold()?);
            let (schedule, kkt) = solve_increments(&c.params, &policy)?;
            let pe = ardm::noisi::pe_schedule(&c.params, &schedule, &policy)?;
            let tau: Vec<f64> = (1..=schedule.len())
                .map(|j| schedule.tau(j, c.params.beta))
                .collect();
            let out = json!({
                "params": c.params,
                "threshold": policy.tail(),
                "J": schedule.positive_count(),
                "schedule": schedule,
                "release_durations": tau,
                "pe": pe.pe_total,
                "kkt": kkt,
            });
            emit(&c, &pretty(&out))
        }
        Command::Bounds { common, k } => {
            let c = common.config()?;
            let p = &c.params;
            let out = if p.memory() == 0 {
                let policy = ThresholdPolicy::Fixed(p.fixed_threshold()?);
                let (lower, upper) = pe_bounds(p, &policy)?;
                json!({
                    "params": p,
                    "lower": lower,
                    "upper": upper,
                    "boundary_points": boundary_sequence(p, &policy)?,
                    "count_bound": increment_count_bound(p, &policy)?,
                })
            } else {
                let (lower, upper) = strategy5_pe_bounds_1isi(p, k)?;
                json!({ "params": p, "strategy": "S5", "k": k, "lower": lower, "upper": upper })
            };
            emit(&c, &pretty(&out))
        }
        Command::Evaluate { common, strategy } => {
            let c = common.config()?;
            let spec = StrategySpec::build(strategy, &c.params)?;
            let a = analytic_pe(&spec, &c.params)?;
            emit(
                &c,
                &pretty(&json!({ "params": c.params, "spec": spec, "analytic": a })),
            )
        }
        Command::Simulate {
            common,
            strategy,
            slots,
            genie,
            allow_infeasible,
            trace,
        } => {
            let c = common.config()?;
            let spec = StrategySpec::build(strategy, &c.params)?;
            let opts = SimOptions {
                genie,
                allow_infeasible,
                ..SimOptions::default()
            };
            let report = match &trace {
                Some(path) => {
                    let (r, events) = replay_trace_with(&spec, &c.params, slots, c.seed, &opts)?;
                    fs::write(path, format_trace(&events)).map_err(|e| {
                        Error::Config(format!("cannot write {}: {e}", path.display()))
                    })?;
                    r
                }
                None => simulate_with(&spec, &c.params, slots, c.seed, &opts)?,
            };
            let analytic = analytic_pe(&spec, &c.params)?;
            emit(
                &c,
                &pretty(&json!({ "params": c.params, "report": report, "analytic": analytic })),
            )
        }
        Command::Sweep(common) => {
            let c = common.config()?;
            emit(&c, &run_sweep(&c)?.render(c.format))
        }
        Command::Compare(common) => {
            let c = common.config()?;
            let cmp = compare_dataset(&run_sweep(&c)?, c.params.memory());
            let text = match c.format {
                Format::Csv => cmp.to_table(),
                Format::Json => {
                    serde_json::to_string_pretty(&cmp).expect("comparison serializes") + "\n"
                }
            };
            emit(&c, &text)?;
            if cmp.violation_count > 0 {
                return Err(Error::Internal(format!(
                    "{} ordering violations",
                    cmp.violation_count
                )));
            }
            Ok(())
        }
        Command::Figure { name, common } => {
            let c = common.apply(figure_config(&name)?)?;
            emit(&c, &run_sweep(&c)?.render(c.format))
        }
    }
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!(
        "{}",
        json!({ "error": { "kind": kind, "message": message } })
    );
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("config", e.render().to_string().trim().to_string(), 2),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(
            e.kind(),
            e.to_string(),
            if matches!(e, Error::Config(_)) { 2 } else { 1 },
        ),
    }
}

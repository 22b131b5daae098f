//! Slot-level Monte Carlo link simulator.
//!
//! The transmitter draws equiprobable bits, tracks its run-length state and
//! storage, and releases `M + Delta_j` molecules on a "1" (S5: the
//! fixed-received-rate release). The receiver sees
//! `Y ~ Poisson(lambda + sum_k p_k X_{i-k})`, decodes with the threshold of
//! the state it *believes* the link is in (tracked from its own decisions,
//! so errors propagate), and updates that belief.

mod sampler;

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use sampler::{sample_poisson, INVERSION_LIMIT};

use crate::error::{Error, Result};
use crate::isi::strategy5_rates_online;
use crate::params::SystemParams;
use crate::poisson::decision_count;
use crate::schedule::feasibility_tolerance;
use crate::strategy::{Strategy, StrategySpec};

/// Slots simulated before counting starts.
pub const WARMUP_SLOTS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Receiver uses the true transmitter state instead of its own estimate.
    pub genie: bool,
    /// Count storage violations instead of failing on the first one.
    pub allow_infeasible: bool,
    pub warmup: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            genie: false,
            allow_infeasible: false,
            warmup: WARMUP_SLOTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub strategy: Strategy,
    pub slots: u64,
    pub errors: u64,
    pub ber: f64,
    /// 95% normal-approximation half-width, `1.96 sqrt(ber (1 - ber) / slots)`.
    pub ci_half_width: f64,
    /// Transmitter run length -> (bits sent, bit errors).
    pub per_state_errors: BTreeMap<usize, (u64, u64)>,
    pub feasibility_violations: u64,
    pub seed: u64,
    pub genie: bool,
}

impl SimReport {
    /// Binomial standard deviation of the BER estimate.
    pub fn sigma(&self) -> f64 {
        (self.ber * (1.0 - self.ber) / self.slots as f64).sqrt()
    }
}

/// One counted slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotEvent {
    pub slot: u64,
    pub bit: bool,
    /// Transmitter run length before this slot.
    pub state: usize,
    pub released: f64,
    pub mean: f64,
    pub received: u64,
    pub threshold: f64,
    pub decoded: bool,
    /// Storage level after this slot's release.
    pub storage: f64,
}

pub const TRACE_COLUMNS: [&str; 9] = [
    "slot",
    "bit",
    "state",
    "released",
    "mean",
    "received",
    "threshold",
    "decoded",
    "storage",
];

impl SlotEvent {
    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.slot,
            self.bit as u8,
            self.state,
            self.released,
            self.mean,
            self.received,
            self.threshold,
            self.decoded as u8,
            self.storage
        )
    }
}

/// Tab-separated log with a header row.
pub fn format_trace(events: &[SlotEvent]) -> String {
    let mut out = TRACE_COLUMNS.join("\t");
    out.push('\n');
    for e in events {
        out.push_str(&e.to_tsv());
        out.push('\n');
    }
    out
}

struct Link<'a> {
    spec: &'a StrategySpec,
    params: &'a SystemParams,
    opts: &'a SimOptions,
    rng: ChaCha8Rng,
    /// Past releases, most recent first.
    past: VecDeque<f64>,
    run: usize,
    rx_run: usize,
    storage: f64,
    recent: VecDeque<String>,
    violations: u64,
}

impl Link<'_> {
    fn step(&mut self, slot: u64) -> Result<SlotEvent> {
        let bit: bool = self.rng.random();
        let m = self.params.m();
        let capacity = self.params.storage();
        let state = self.run;
        let released = if !bit {
            0.0
        } else if self.spec.name == Strategy::S5 {
            let prev1 = self.past.front().copied().unwrap_or(0.0);
            let prev2 = self.past.get(1).copied().unwrap_or(0.0);
            strategy5_rates_online(prev1, prev2, self.params)?
        } else {
            m + self.spec.schedule.delta(state + 1)
        };
        // storage: a "0" slot refills it; a "1" draws its increment from it
        if bit {
            if self.spec.name != Strategy::S5 {
                self.storage -= released - m;
            }
        } else {
            self.storage = capacity;
        }
        let mut mean = self.params.lambda + self.params.p(0) * released;
        for (k, x) in self.past.iter().enumerate() {
            mean += self.params.p(k + 1) * x;
        }
        let received = sample_poisson(&mut self.rng, mean);
        let rx_state = if self.opts.genie { state } else { self.rx_run };
        let threshold = self.spec.policy.threshold(rx_state + 1);
        let decoded = received >= decision_count(threshold);
        let event = SlotEvent {
            slot,
            bit,
            state,
            released,
            mean,
            received,
            threshold,
            decoded,
            storage: self.storage,
        };
        self.recent.push_back(event.to_tsv());
        if self.recent.len() > 8 {
            self.recent.pop_front();
        }
        let tol = feasibility_tolerance(capacity);
        if self.storage < -tol || self.storage > capacity + tol {
            if self.opts.allow_infeasible {
                self.violations += 1;
            } else {
                return Err(Error::Storage {
                    slot,
                    level: self.storage,
                    capacity,
                    trace: self.recent.iter().cloned().collect(),
                });
            }
        }
        self.run = if bit { self.run + 1 } else { 0 };
        self.rx_run = if decoded { self.rx_run + 1 } else { 0 };
        self.past.push_front(released);
        self.past.truncate(self.params.memory());
        Ok(event)
    }
}

fn run(
    spec: &StrategySpec,
    params: &SystemParams,
    n_slots: u64,
    seed: u64,
    opts: &SimOptions,
    mut trace: Option<&mut Vec<SlotEvent>>,
) -> Result<SimReport> {
    params.validate()?;
    spec.validate()?;
    if n_slots == 0 {
        return Err(Error::domain("n_slots must be >= 1"));
    }
    let mut link = Link {
        spec,
        params,
        opts,
        rng: ChaCha8Rng::seed_from_u64(seed),
        past: VecDeque::new(),
        run: 0,
        rx_run: 0,
        storage: params.storage(),
        recent: VecDeque::new(),
        violations: 0,
    };
    for slot in 0..opts.warmup {
        link.step(slot)?;
    }
    link.violations = 0;
    let mut errors = 0;
    let mut per_state: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
    for i in 0..n_slots {
        let e = link.step(opts.warmup + i)?;
        let wrong = e.bit != e.decoded;
        errors += wrong as u64;
        let row = per_state.entry(e.state).or_default();
        row.0 += 1;
        row.1 += wrong as u64;
        if let Some(t) = trace.as_deref_mut() {
            t.push(SlotEvent { slot: i, ..e });
        }
    }
    let ber = errors as f64 / n_slots as f64;
    Ok(SimReport {
        strategy: spec.name,
        slots: n_slots,
        errors,
        ber,
        ci_half_width: 1.96 * (ber * (1.0 - ber) / n_slots as f64).sqrt(),
        per_state_errors: per_state,
        feasibility_violations: link.violations,
        seed,
        genie: opts.genie,
    })
}

/// Runs `n_slots` counted slots (after the warm-up). Identical inputs give
/// identical reports.
pub fn simulate(
    spec: &StrategySpec,
    params: &SystemParams,
    n_slots: u64,
    seed: u64,
) -> Result<SimReport> {
    run(spec, params, n_slots, seed, &SimOptions::default(), None)
}

pub fn simulate_with(
    spec: &StrategySpec,
    params: &SystemParams,
    n_slots: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<SimReport> {
    run(spec, params, n_slots, seed, opts, None)
}

/// Same dynamics as [`simulate_with`], returning one event per counted slot.
pub fn replay_trace_with(
    spec: &StrategySpec,
    params: &SystemParams,
    n_slots: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<(SimReport, Vec<SlotEvent>)> {
    let mut events = Vec::with_capacity(n_slots as usize);
    let r = run(spec, params, n_slots, seed, opts, Some(&mut events))?;
    Ok((r, events))
}

pub fn replay_trace(
    spec: &StrategySpec,
    params: &SystemParams,
    n_slots: u64,
    seed: u64,
) -> Result<Vec<SlotEvent>> {
    Ok(replay_trace_with(spec, params, n_slots, seed, &SimOptions::default())?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{IncrementSchedule, ThresholdPolicy};

    fn spec(name: Strategy, p: &SystemParams) -> StrategySpec {
        StrategySpec::build(name, p).unwrap()
    }

    #[test]
    fn deterministic_for_equal_seeds() {
        let p = SystemParams::reference(15.0);
        let s = spec(Strategy::S3, &p);
        assert_eq!(
            simulate(&s, &p, 20_000, 5).unwrap(),
            simulate(&s, &p, 20_000, 5).unwrap()
        );
        assert_ne!(
            simulate(&s, &p, 20_000, 5).unwrap(),
            simulate(&s, &p, 20_000, 6).unwrap()
        );
    }

    #[test]
    fn trace_matches_report() {
        let p = SystemParams::reference(9.0);
        let s = spec(Strategy::S2, &p);
        let (r, t) = replay_trace_with(&s, &p, 5_000, 3, &SimOptions::default()).unwrap();
        assert_eq!(t.len(), 5_000);
        assert_eq!(
            t.iter().filter(|e| e.bit != e.decoded).count() as u64,
            r.errors
        );
        assert_eq!(r, simulate(&s, &p, 5_000, 3).unwrap());
        // a "1" right after a "0" spends the first increment
        let e = t.windows(2).find(|w| !w[0].bit && w[1].bit).unwrap();
        assert_eq!(e[1].released, 50.0 + s.schedule.delta(1));
        assert!(t
            .iter()
            .all(|e| e.storage >= -1e-9 && e.storage <= 42.0 + 1e-9));
        let text = format_trace(&t[..3]);
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("slot\tbit\tstate"));
    }

    #[test]
    fn overspending_schedule_fails_or_is_counted() {
        let p = SystemParams::reference(15.0);
        let s = StrategySpec {
            name: Strategy::S2,
            schedule: IncrementSchedule::new(vec![30.0, 20.0]),
            policy: ThresholdPolicy::Fixed(34.0),
            memory: 0,
        };
        match simulate(&s, &p, 10_000, 1) {
            Err(Error::Storage { trace, .. }) => assert!(!trace.is_empty()),
            other => panic!("expected storage failure, got {other:?}"),
        }
        let opts = SimOptions {
            allow_infeasible: true,
            ..SimOptions::default()
        };
        assert!(
            simulate_with(&s, &p, 10_000, 1, &opts)
                .unwrap()
                .feasibility_violations
                > 0
        );
    }

    #[test]
    fn quiet_channel_has_no_errors() {
        let p = SystemParams::reference(1e-6);
        let s = spec(Strategy::S1, &p);
        assert_eq!(simulate(&s, &p, 10_000, 2).unwrap().errors, 0);
    }

    #[test]
    fn report_invariants() {
        let p = SystemParams::reference(15.0);
        let r = simulate(&spec(Strategy::S1, &p), &p, 50_000, 9).unwrap();
        assert_eq!(r.ber, r.errors as f64 / r.slots as f64);
        assert!((r.ci_half_width - 1.96 * r.sigma()).abs() < 1e-18);
        let sent: u64 = r.per_state_errors.values().map(|v| v.0).sum();
        assert_eq!(sent, 50_000);
    }
}

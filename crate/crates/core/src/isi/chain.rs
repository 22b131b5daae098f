use crate::error::{Error, Result};
use crate::markov::TransitionMatrix;
use crate::params::SystemParams;
use crate::poisson::decision_count;
use crate::poisson::split_tails;
use crate::schedule::{ErrorReport, IncrementSchedule, StateError, ThresholdPolicy};

/// A labelled finite chain with its stationary law.
#[derive(Debug, Clone, PartialEq)]
pub struct IsiChain {
    pub labels: Vec<String>,
    pub transition: TransitionMatrix,
    pub steady: Vec<f64>,
}

/// The two-symbol chain over `00, 01, 010, 011, 0110, ...`, truncated to
/// `2 * j_cap` states. The last pair aggregates every longer run: on "1" the
/// final state stays put, on "0" it moves to its odd partner.
pub fn two_symbol_chain(j_cap: usize) -> Result<IsiChain> {
    if j_cap < 2 {
        return Err(Error::domain(format!("j_cap must be >= 2, got {j_cap}")));
    }
    let n = 2 * j_cap;
    let mut t = TransitionMatrix::zeros(n);
    for k in 1..=j_cap {
        let odd = 2 * k - 1;
        t.rows[odd - 1][0] = 0.5;
        t.rows[odd - 1][1] = 0.5;
        let even = 2 * k;
        if k < j_cap {
            t.rows[even - 1][even] = 0.5;
            t.rows[even - 1][even + 1] = 0.5;
        } else {
            t.rows[even - 1][even - 2] = 0.5;
            t.rows[even - 1][even - 1] = 0.5;
        }
    }
    let labels = (1..=n)
        .map(|s| {
            let k = s.div_ceil(2);
            let tag = if s % 2 == 1 {
                if k == 1 {
                    "00".to_string()
                } else {
                    format!("0{}0", "1".repeat(k - 1))
                }
            } else {
                format!("0{}", "1".repeat(k))
            };
            if k == j_cap {
                format!("{tag}+")
            } else {
                tag
            }
        })
        .collect();
    let steady = t.stationary()?;
    Ok(IsiChain {
        labels,
        transition: t,
        steady,
    })
}

/// One state of the joint chain: run of "1"s before the last `K` slots
/// (capped) and those `K` bits, oldest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct JointState {
    pub run: usize,
    pub bits: u32,
}

/// Joint (run length, last `K` bits) chain: the exact state of a
/// run-length-adaptive transmitter seen through a `K`-slot channel.
#[derive(Debug, Clone)]
pub(crate) struct JointChain {
    pub k: usize,
    pub cap: usize,
    pub states: Vec<JointState>,
    pub steady: Vec<f64>,
}

impl JointChain {
    fn index(k: usize, run: usize, bits: u32) -> usize {
        (run << k) | bits as usize
    }

    pub fn new(k: usize, cap: usize) -> Result<Self> {
        let per = 1usize << k;
        let n = (cap + 1) * per;
        let mut t = TransitionMatrix::zeros(n);
        let mut states = Vec::with_capacity(n);
        for run in 0..=cap {
            for bits in 0..per as u32 {
                states.push(JointState { run, bits });
                let from = Self::index(k, run, bits);
                for b in [0u32, 1] {
                    let (next_run, next_bits) = if k == 0 {
                        (if b == 1 { (run + 1).min(cap) } else { 0 }, 0)
                    } else {
                        let oldest = (bits >> (k - 1)) & 1;
                        let r = if oldest == 1 { (run + 1).min(cap) } else { 0 };
                        (r, ((bits << 1) | b) & (per as u32 - 1))
                    };
                    t.rows[from][Self::index(k, next_run, next_bits)] += 0.5;
                }
            }
        }
        let steady = t.stationary()?;
        Ok(JointChain {
            k,
            cap,
            states,
            steady,
        })
    }

    /// Window bits oldest first.
    pub fn window(&self, s: JointState) -> impl Iterator<Item = bool> + '_ {
        (0..self.k).rev().map(move |i| (s.bits >> i) & 1 == 1)
    }

    /// Hypothesis means and the receiver's state index `j` (= run + 1)
    /// for the current slot of every joint state.
    pub fn terms(
        &self,
        params: &SystemParams,
        schedule: &IncrementSchedule,
    ) -> Result<Vec<JointTerm>> {
        let m = params.m();
        let release = |run: usize| m + schedule.delta(run + 1);
        let mut out = Vec::with_capacity(self.states.len());
        let mut rel = vec![0.0; self.k];
        for (idx, s) in self.states.iter().enumerate() {
            let mut run = s.run;
            for (slot, b) in self.window(*s).enumerate() {
                rel[slot] = if b { release(run) } else { 0.0 };
                run = if b { (run + 1).min(self.cap) } else { 0 };
            }
            let isi: f64 = (1..=self.k).map(|d| params.p(d) * rel[self.k - d]).sum();
            let x = release(run);
            if x < 0.0 || rel.iter().any(|r| *r < 0.0) {
                return Err(Error::domain(format!(
                    "schedule releases a negative amount in state {}",
                    run + 1
                )));
            }
            out.push(JointTerm {
                weight: self.steady[idx],
                state: run + 1,
                mean0: params.lambda + isi,
                mean1: params.lambda + isi + params.p(0) * x,
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct JointTerm {
    pub weight: f64,
    /// Receiver state index `j >= 1` (the threshold it applies).
    pub state: usize,
    pub mean0: f64,
    pub mean1: f64,
}

/// Run cap that makes the truncated chain exact for this schedule/policy.
pub(crate) fn lossless_cap(schedule: &IncrementSchedule, policy: &ThresholdPolicy) -> usize {
    schedule.len().max(policy.state_count()) + 1
}

pub(crate) fn check_memory(params: &SystemParams, k: usize) -> Result<()> {
    if k > 2 {
        return Err(Error::Unsupported(format!(
            "exact evaluation covers channel memory up to 2 slots, got {k}"
        )));
    }
    if params.memory() > k {
        return Err(Error::Precondition(format!(
            "channel memory {} exceeds evaluated memory {k}",
            params.memory()
        )));
    }
    Ok(())
}

/// Sums `(P_{e|0}, P_{e|1})` over the joint terms for the given thresholds.
pub(crate) fn conditional_errors(
    terms: &[JointTerm],
    policy: &ThresholdPolicy,
) -> (f64, f64, Vec<StateError>) {
    let mut pe0 = 0.0;
    let mut pe1 = 0.0;
    let mut rows: Vec<StateError> = Vec::new();
    for t in terms {
        let n = decision_count(policy.threshold(t.state));
        let e0 = split_tails(n, t.mean0).1;
        let e1 = split_tails(n, t.mean1).0;
        pe0 += t.weight * e0;
        pe1 += t.weight * e1;
        let run = t.state - 1;
        if rows.len() <= run {
            rows.resize_with(run + 1, || StateError {
                state: 0,
                probability: 0.0,
                conditional_error: 0.0,
            });
        }
        let r = &mut rows[run];
        r.state = run;
        r.probability += t.weight;
        // accumulate the weighted error, normalized below
        r.conditional_error += t.weight * 0.5 * (e0 + e1);
    }
    for r in &mut rows {
        if r.probability > 0.0 {
            r.conditional_error /= r.probability;
        }
    }
    rows.retain(|r| r.probability > 0.0);
    (pe0, pe1, rows)
}

/// Exact error probability of a run-length schedule over a channel with
/// memory `k` (0, 1 or 2 slots), receiver knowing the true state.
pub fn exact_pe_isi(
    params: &SystemParams,
    schedule: &IncrementSchedule,
    policy: &ThresholdPolicy,
    k: usize,
) -> Result<ErrorReport> {
    exact_pe_isi_with_cap(params, schedule, policy, k, 0)
}

/// [`exact_pe_isi`] with the run cap raised by `extra` states (a cap
/// sensitivity check; the default cap is already lossless).
pub fn exact_pe_isi_with_cap(
    params: &SystemParams,
    schedule: &IncrementSchedule,
    policy: &ThresholdPolicy,
    k: usize,
    extra: usize,
) -> Result<ErrorReport> {
    params.validate_analytic()?;
    policy.validate()?;
    check_memory(params, k)?;
    let chain = JointChain::new(k, lossless_cap(schedule, policy) + extra)?;
    let terms = chain.terms(params, schedule)?;
    let (pe0, pe1, rows) = conditional_errors(&terms, policy);
    let mut r = ErrorReport::from_conditionals(pe0, pe1, rows);
    r.feasible = Some(crate::schedule::validate_schedule(schedule, params.storage()).feasible);
    Ok(r)
}

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::poisson::ml_threshold_against;
use crate::schedule::{IncrementSchedule, ThresholdPolicy};

fn require_memory(params: &SystemParams, k: usize) -> Result<()> {
    params.validate_analytic()?;
    if params.memory() > k {
        return Err(Error::Precondition(format!(
            "channel memory {} exceeds {k} slot(s)",
            params.memory()
        )));
    }
    Ok(())
}

/// Releases `l_i` solving `p_0 l_i + v_i = M + Delta_i^{no-ISI}` with
/// `v_1 = first_isi` and `v_i = p_1 l_{i-1} + p_2 l_{i-2}` (`l_0 = 0`).
fn releases(params: &SystemParams, noisi: &IncrementSchedule, first_isi: f64) -> Vec<f64> {
    let m = params.m();
    let (p0, p1, p2) = (params.p(0), params.p(1), params.p(2));
    let mut l: Vec<f64> = Vec::with_capacity(noisi.len());
    for i in 1..=noisi.len() {
        let v = if i == 1 {
            first_isi
        } else {
            p1 * l[i - 2] + if i >= 3 { p2 * l[i - 3] } else { 0.0 }
        };
        l.push((m + noisi.delta(i) - v) / p0);
    }
    l
}

fn to_schedule(params: &SystemParams, l: Vec<f64>) -> IncrementSchedule {
    let m = params.m();
    IncrementSchedule::new(l.into_iter().map(|x| x - m).collect())
}

/// Sub-optimal one-symbol ISI increments.
///
/// The result can overspend the storage; it is returned as-is and callers
/// inspect it with [`crate::schedule::validate_schedule`].
pub fn suboptimal_increments_1isi(
    params: &SystemParams,
    noisi: &IncrementSchedule,
) -> Result<IncrementSchedule> {
    require_memory(params, 1)?;
    Ok(to_schedule(params, releases(params, noisi, 0.0)))
}

/// Sub-optimal two-symbol ISI increments. The first state sees the averaged
/// interference `p_2 M / 2` of the states whose last bit is "0".
pub fn suboptimal_increments_2isi(
    params: &SystemParams,
    noisi: &IncrementSchedule,
) -> Result<IncrementSchedule> {
    require_memory(params, 2)?;
    let first = params.p(2) * params.m() / 2.0;
    Ok(to_schedule(params, releases(params, noisi, first)))
}

/// ML threshold in state `s_{j-1}` given the interference of the previous
/// one or two releases. Releases at indices `<= 0` belong to a "0" slot and
/// count as zero molecules.
pub fn isi_adaptive_threshold(
    j: usize,
    schedule: &IncrementSchedule,
    params: &SystemParams,
) -> Result<f64> {
    if j == 0 {
        return Err(Error::domain("state index starts at 1"));
    }
    let release = |i: isize| {
        if i >= 1 {
            params.m() + schedule.delta(i as usize)
        } else {
            0.0
        }
    };
    let j = j as isize;
    let signal = params.p(0) * release(j);
    let floor = params.p(1) * release(j - 1) + params.p(2) * release(j - 2) + params.lambda;
    ml_threshold_against(signal, floor)
}

/// [`isi_adaptive_threshold`] for `j = 1..=L+K`, the steady value as tail.
pub fn isi_adaptive_policy(
    params: &SystemParams,
    schedule: &IncrementSchedule,
) -> Result<ThresholdPolicy> {
    let k = params.memory();
    let n = schedule.len() + k;
    let values = (1..=n)
        .map(|j| isi_adaptive_threshold(j, schedule, params))
        .collect::<Result<Vec<_>>>()?;
    let tail = isi_adaptive_threshold(n + k.max(1) + 1, schedule, params)?;
    Ok(ThresholdPolicy::PerState { values, tail })
}

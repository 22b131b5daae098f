use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::schedule::IncrementSchedule;

/// Coefficients of the two hypothesis means in terms of the release levels:
/// `w0 = lambda + c_0 M + sum_i c_i Delta_i`, `w1 = lambda + d_0 M + sum_i d_i Delta_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalWeights {
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

impl SignalWeights {
    pub fn evaluate(&self, m: f64, schedule: &IncrementSchedule, lambda: f64) -> (f64, f64) {
        let eval = |coef: &[f64]| -> f64 {
            coef.iter()
                .enumerate()
                .map(|(i, w)| if i == 0 { w * m } else { w * schedule.delta(i) })
                .sum::<f64>()
        };
        (lambda + eval(&self.c), lambda + eval(&self.d))
    }
}

fn add(v: &mut Vec<f64>, i: usize, x: f64) {
    if v.len() <= i {
        v.resize(i + 1, 0.0);
    }
    v[i] += x;
}

/// Weights for the next slot after `history` (oldest bit first).
///
/// Bits before the history are taken as "0", so the run length of every
/// listed "1" is known. Only the last `K = params.memory()` bits interfere.
pub fn signal_weights(history: &[bool], params: &SystemParams) -> Result<SignalWeights> {
    let k_mem = params.memory();
    if history.len() < k_mem {
        return Err(Error::Precondition(format!(
            "history has {} bits, channel memory is {k_mem}",
            history.len()
        )));
    }
    // increment index used by each slot: run of "1"s before it, plus one
    let mut run = 0usize;
    let mut levels = Vec::with_capacity(history.len());
    for &b in history {
        levels.push(if b { Some(run + 1) } else { None });
        run = if b { run + 1 } else { 0 };
    }
    let mut c = vec![0.0];
    for k in 1..=k_mem {
        if let Some(level) = levels[history.len() - k] {
            let p = params.p(k);
            add(&mut c, 0, p);
            add(&mut c, level, p);
        }
    }
    let mut d = c.clone();
    add(&mut d, 0, params.p(0));
    add(&mut d, run + 1, params.p(0));
    Ok(SignalWeights { c, d })
}

/// Poisson means `(w0, w1)` of the next slot after `history`.
pub fn received_means(
    history: &[bool],
    schedule: &IncrementSchedule,
    params: &SystemParams,
) -> Result<(f64, f64)> {
    let w = signal_weights(history, params)?;
    Ok(w.evaluate(params.m(), schedule, params.lambda))
}

/// Per-state interference `v_i` and release `l_i = M + Delta_i` for the
/// first rows of the state tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsiValueTable {
    pub labels: Vec<String>,
    pub isi: Vec<f64>,
    pub release: Vec<f64>,
}

fn level(params: &SystemParams, schedule: &IncrementSchedule, i: usize) -> f64 {
    if i == 0 {
        0.0
    } else {
        params.m() + schedule.delta(i)
    }
}

/// One-symbol table: state `s_{i-1} = 0 1^{i-1}` has `v_i = p_1 (M + Delta_{i-1})`.
pub fn isi_table_1isi(
    params: &SystemParams,
    schedule: &IncrementSchedule,
    rows: usize,
) -> IsiValueTable {
    let mut t = IsiValueTable {
        labels: Vec::new(),
        isi: Vec::new(),
        release: Vec::new(),
    };
    for i in 1..=rows {
        t.labels.push(format!("0{}", "1".repeat(i - 1)));
        t.isi.push(params.p(1) * level(params, schedule, i - 1));
        t.release.push(level(params, schedule, i));
    }
    t
}

/// Two-symbol table over the tilde states `00, 01, 010, 011, 0110, ...`.
pub fn isi_table_2isi(
    params: &SystemParams,
    schedule: &IncrementSchedule,
    rows: usize,
) -> IsiValueTable {
    let mut t = IsiValueTable {
        labels: Vec::new(),
        isi: Vec::new(),
        release: Vec::new(),
    };
    for s in 1..=rows {
        let k = s.div_ceil(2);
        if s % 2 == 1 {
            // 0 1^{k-1} 0: only the "1" two slots back interferes
            t.labels.push(if k == 1 {
                "00".into()
            } else {
                format!("0{}0", "1".repeat(k - 1))
            });
            t.isi.push(params.p(2) * level(params, schedule, k - 1));
            t.release.push(level(params, schedule, 1));
        } else {
            t.labels.push(format!("0{}", "1".repeat(k)));
            t.isi.push(
                params.p(1) * level(params, schedule, k)
                    + params.p(2) * level(params, schedule, k - 1),
            );
            t.release.push(level(params, schedule, k + 1));
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn worked_example_four_slot_memory() {
        let p = [0.5, 0.2, 0.13, 0.1, 0.07];
        let params = SystemParams::reference(15.0).with_hitting(p.to_vec());
        let w = signal_weights(&bits("011101101"), &params).unwrap();
        let c = [p[1] + p[3] + p[4], p[1] + p[4], p[3]];
        let d = [p[0] + p[1] + p[3] + p[4], p[1] + p[4], p[0] + p[3]];
        for i in 0..3 {
            assert!((w.c[i] - c[i]).abs() < 1e-15);
            assert!((w.d[i] - d[i]).abs() < 1e-15);
        }
        assert_eq!(w.c.len(), 3);
    }

    #[test]
    fn quiet_history() {
        let params = SystemParams::reference(15.0).with_hitting(vec![0.9, 0.1]);
        let s = IncrementSchedule::new(vec![4.0, 2.0]);
        let (w0, w1) = received_means(&bits("000"), &s, &params).unwrap();
        assert_eq!(w0, 15.0);
        assert!((w1 - (15.0 + 0.9 * 54.0)).abs() < 1e-12);
    }

    #[test]
    fn memoryless_channel_ignores_history() {
        let params = SystemParams::reference(15.0);
        let s = IncrementSchedule::new(vec![4.0, 2.0]);
        let (w0, w1) = received_means(&bits("1"), &s, &params).unwrap();
        assert_eq!(w0, 15.0);
        assert!((w1 - 67.0).abs() < 1e-12);
    }

    #[test]
    fn short_history_rejected() {
        let params = SystemParams::reference(15.0).with_hitting(vec![0.85, 0.1, 0.05]);
        assert!(matches!(
            received_means(&bits("1"), &IncrementSchedule::zero(), &params),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn tables_match_hand_values() {
        let params = SystemParams::reference(15.0).with_hitting(vec![0.85, 0.1, 0.05]);
        let s = IncrementSchedule::new(vec![4.0, 2.0]);
        let t = isi_table_2isi(&params, &s, 6);
        assert_eq!(t.labels, ["00", "01", "010", "011", "0110", "0111"]);
        let expect = [
            0.0,
            0.1 * 54.0,
            0.05 * 54.0,
            0.1 * 52.0 + 0.05 * 54.0,
            0.05 * 52.0,
            0.1 * 50.0 + 0.05 * 52.0,
        ];
        for (a, b) in t.isi.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(t.release, [54.0, 52.0, 54.0, 50.0, 54.0, 50.0]);
        let t1 = isi_table_1isi(&params.with_hitting(vec![0.9, 0.1]), &s, 3);
        assert_eq!(t1.labels, ["0", "01", "011"]);
        assert!((t1.isi[2] - 5.2).abs() < 1e-12);
    }
}

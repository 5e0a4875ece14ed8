//! Average decoding delay (ADD) and density-tuning schedules.
//!
//! The tuning scheme chooses a per-transmission coefficient density: very
//! sparse packets decode sources immediately but contribute little rank, dense
//! packets complete the generation but decode nothing on the way. The
//! scheduler searches a sparse-to-dense family, scoring candidates on the
//! analytical model's expected-decoded curve (never on simulation), and
//! minimizes the expected ADD
//!
//! ```text
//! E(ADD) = (1/n) * sum_m (n - E(X | M = m))
//! ```
//!
//! optionally subject to a cap on the modeled number of transmissions to
//! complete (ANT) relative to dense RLNC coding.

use crate::model::chain::{StepLaw, SubsetChain};
use crate::{Error, Result};

/// Per-transmission density plan plus the realized cumulative targets.
#[derive(Debug, Clone)]
pub struct TuningSchedule {
    pub n: usize,
    pub q: u16,
    /// cumulative matrix-density targets p_1..p_m0 (running mean of packets)
    pub targets: Vec<f64>,
    /// realized per-packet densities (clamped to [1/n, 1 - 1/q])
    pub per_packet: Vec<f64>,
    /// first transmission count with modeled E(X|M) >= n - tol
    pub m0: usize,
    /// modeled expected ADD of this schedule
    pub model_add: f64,
    /// modeled expected transmissions to complete
    pub model_ant: f64,
}

impl TuningSchedule {
    /// Packet density for 1-based transmission index, extending the plateau.
    pub fn density_at(&self, i: usize) -> f64 {
        if self.per_packet.is_empty() {
            return 0.5;
        }
        let idx = i.saturating_sub(1).min(self.per_packet.len() - 1);
        self.per_packet[idx]
    }

    /// CSV with columns (i, target_p, packet_p).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,target_p,packet_p\n");
        for (i, (t, p)) in self.targets.iter().zip(&self.per_packet).enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, t, p));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<TuningSchedule> {
        let mut targets = Vec::new();
        let mut per_packet = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            if ln == 0 || line.trim().is_empty() {
                continue;
            }
            let mut it = line.split(',');
            let _i = it.next();
            let t: f64 = it
                .next()
                .ok_or_else(|| Error::BadParams(format!("schedule csv line {ln}: missing target")))?
                .trim()
                .parse()
                .map_err(|e| Error::BadParams(format!("schedule csv line {ln}: {e}")))?;
            let p: f64 = it
                .next()
                .ok_or_else(|| Error::BadParams(format!("schedule csv line {ln}: missing packet")))?
                .trim()
                .parse()
                .map_err(|e| Error::BadParams(format!("schedule csv line {ln}: {e}")))?;
            targets.push(t);
            per_packet.push(p);
        }
        let m0 = targets.len();
        Ok(TuningSchedule {
            n: 0,
            q: 0,
            targets,
            per_packet,
            m0,
            model_add: f64::NAN,
            model_ant: f64::NAN,
        })
    }
}

/// Expected transmissions per decoded packet and to decode everything.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AddReport {
    pub add: f64,
    pub ant: f64,
}

/// ADD/ANT from an expected-decoded curve `E(X|M=i)`, i starting at 0:
/// `add = (m0 n - sum_{i<m0} E_i) / n`, `ant = m0`, with `m0` the first index
/// where the curve reaches `n - tol`.
pub fn add_from_curve(expected: &[f64], n: usize, tol: f64) -> Result<AddReport> {
    let target = n as f64 - tol;
    let m0 = expected
        .iter()
        .position(|&e| e >= target)
        .ok_or(Error::UnboundedHorizon { target, m_max: expected.len() })?;
    let partial: f64 = expected[..m0].iter().sum();
    Ok(AddReport { add: (m0 as f64 * n as f64 - partial) / n as f64, ant: m0 as f64 })
}

/// Model evaluation of an arbitrary per-packet density sequence.
///
/// Runs the single-source chain with per-step mixed densities (incoming packet
/// density against the cumulative density of the rows already held). Packets
/// are treated as constrained-mode rows (never all-zero).
pub struct SequenceModel {
    pub n: usize,
    pub q: u16,
    chain: SubsetChain,
    cum: f64,
    steps: usize,
    weight_history: Vec<usize>,
    /// E(X|M=i) for i = 0..steps
    pub expected: Vec<f64>,
    /// P(rank = n) after i rows
    pub full_prob: Vec<f64>,
}

impl SequenceModel {
    pub fn new(n: usize, q: u16) -> SequenceModel {
        SequenceModel {
            n,
            q,
            chain: SubsetChain::new(n, 1, q),
            cum: 0.0,
            steps: 0,
            weight_history: Vec::new(),
            expected: vec![0.0],
            full_prob: vec![0.0],
        }
    }

    /// Feed one packet of density `p` (an exact-weight round(n*p) row).
    pub fn push(&mut self, p: f64) {
        let span_density = if self.steps == 0 { p } else { self.cum / self.steps as f64 };
        let w = ((self.n as f64 * p).round() as usize).clamp(1, self.n);
        let same = self.weight_history.iter().filter(|&&h| h == w).count();
        let law = StepLaw::constrained(self.q, p, span_density, self.n, same);
        self.chain.step_constrained(&law, self.n);
        self.weight_history.push(w);
        self.cum += p;
        self.steps += 1;
        let deltas = self.chain.delta_marginal();
        self.expected.push(self.n as f64 * deltas[1]);
        let rm = self.chain.rank_marginal();
        self.full_prob.push(rm[self.n]);
    }

    /// Infinite-horizon ADD proxy: (1/n) sum_{m>=0} (n - E_m) accumulated so
    /// far (the m = 0 term included, matching the telescoped Lemma-4 sum).
    pub fn add_area(&self) -> f64 {
        self.expected.iter().map(|e| self.n as f64 - e).sum::<f64>() / self.n as f64
    }

    /// Expected completion count accumulated so far: sum_{m>=0} (1 - P_full(m)).
    pub fn ant_area(&self) -> f64 {
        self.full_prob.iter().map(|p| 1.0 - p).sum::<f64>()
    }
}

/// Scheduler options.
#[derive(Debug, Clone, Copy)]
pub struct ScheduleOptions {
    /// completion tolerance: m0 is the first m with E >= n - tol
    pub tol: f64,
    /// cap on modeled ANT relative to dense RLNC (e.g. 0.03 = +3%); `None`
    /// optimizes ADD alone
    pub ant_cap: Option<f64>,
    /// search horizon in transmissions
    pub m_cap: usize,
}

impl ScheduleOptions {
    pub fn for_n(n: usize) -> ScheduleOptions {
        ScheduleOptions { tol: 0.5, ant_cap: Some(0.028), m_cap: 4 * n }
    }

    pub fn unconstrained(n: usize) -> ScheduleOptions {
        ScheduleOptions { ant_cap: None, ..ScheduleOptions::for_n(n) }
    }
}

fn evaluate_sequence(n: usize, q: u16, densities: &[f64], opts: &ScheduleOptions) -> (f64, f64, Vec<f64>) {
    let mut sm = SequenceModel::new(n, q);
    let mut m = 0usize;
    while m < opts.m_cap {
        let p = densities.get(m).copied().unwrap_or_else(|| *densities.last().unwrap());
        sm.push(p);
        m += 1;
        if sm.expected[m] >= n as f64 - 1e-6 && sm.full_prob[m] >= 1.0 - 1e-9 {
            break;
        }
    }
    (sm.add_area(), sm.ant_area(), sm.expected.clone())
}

/// Candidate per-packet density family: a unit-weight phase of length `k`, a
/// linear weight ramp of length `r`, then a plateau at weight `plateau_w`.
fn family_member(n: usize, k: usize, r: usize, plateau_w: f64) -> Vec<f64> {
    let len = k + r + 1;
    let mut out = Vec::with_capacity(len);
    for i in 0..len {
        let w = if i < k {
            1.0
        } else if i < k + r {
            let t = (i - k + 1) as f64 / (r + 1) as f64;
            1.0 + t * (plateau_w - 1.0)
        } else {
            plateau_w
        };
        out.push(w / n as f64);
    }
    out
}

/// Search the sparse-to-dense family for the density plan minimizing the
/// modeled ADD, optionally capping the modeled completion count at
/// `(1 + ant_cap)` times the dense-coding value.
pub fn optimize_schedule(n: usize, q: u16, opts: &ScheduleOptions) -> Result<TuningSchedule> {
    let lo = 1.0 / n as f64;
    let hi = 1.0 - 1.0 / q as f64;
    let rlnc_w = (n as f64 * hi).round().clamp(1.0, n as f64);
    let (_, ant_rlnc, _) = evaluate_sequence(n, q, &[rlnc_w / n as f64], opts);
    let ant_limit = opts.ant_cap.map(|c| ant_rlnc * (1.0 + c));

    let half_w = (n as f64 / 2.0).round();
    let mut plateaus = vec![half_w];
    if (rlnc_w - half_w).abs() > 0.5 {
        plateaus.push(rlnc_w);
    }
    let mut ramps = vec![0usize, 2, 4, 6, n / 8, n / 4, n / 2];
    ramps.sort_unstable();
    ramps.dedup();
    let mut candidates = Vec::new();
    for &pw in &plateaus {
        for k in 0..=n {
            for &r in &ramps {
                candidates.push((k, r, pw));
            }
        }
    }
    use rayon::prelude::*;
    let evaluated: Vec<(f64, Vec<f64>, f64, Vec<f64>)> = candidates
        .par_iter()
        .map(|&(k, r, pw)| {
            let densities = family_member(n, k, r, pw);
            let (add, ant, expected) = evaluate_sequence(n, q, &densities, opts);
            (add, densities, ant, expected)
        })
        .collect();
    let mut best: Option<(f64, Vec<f64>, f64, Vec<f64>)> = None;
    for cand in evaluated {
        if let Some(limit) = ant_limit {
            if cand.2 > limit {
                continue;
            }
        }
        if best.as_ref().map(|(b, ..)| cand.0 < *b).unwrap_or(true) {
            best = Some(cand);
        }
    }
    let (model_add, densities, model_ant, expected) =
        best.ok_or_else(|| Error::BadParams("no feasible schedule in family".into()))?;
    let m0 = expected
        .iter()
        .position(|&e| e >= n as f64 - opts.tol)
        .unwrap_or(expected.len().saturating_sub(1));
    let mut per_packet = Vec::with_capacity(m0.max(1));
    for i in 0..m0.max(1) {
        let p = densities.get(i).copied().unwrap_or_else(|| *densities.last().unwrap());
        per_packet.push(p.clamp(lo, hi));
    }
    let mut targets = Vec::with_capacity(per_packet.len());
    let mut acc = 0.0;
    for (i, &p) in per_packet.iter().enumerate() {
        acc += p;
        targets.push(acc / (i + 1) as f64);
    }
    Ok(TuningSchedule { n, q, targets, per_packet, m0: m0.max(1), model_add, model_ant })
}

//! Coupled (sub-rank, pinned-dimensions, coverage) Markov chains.
//!
//! For a fixed source subset S with |S| = d, delete S's columns from the
//! decoding matrix. Track per received row:
//!
//! - `rho`: rank of the column-deleted submatrix (`c = n - d` columns),
//! - `delta = rank(M) - rho`: dimensions of `span(M) ∩ F_q^S` already pinned,
//! - `u`: submatrix columns untouched by any row so far (fields with q > 2
//!   only; over GF(2) the span union already carries the coverage obstruction).
//!
//! S is fully decoded exactly when `delta = d`. A row touching an uncovered
//! sub-column always extends `rho`; a row supported inside the covered region
//! either extends `rho`, or lies in the sub-span and then pins a new dimension
//! with a rate derived from the residual it leaves on S's coordinates.

use super::span::{SpanDecomp, SpanLaw};
use crate::model::gamma::binomial;
use std::cell::RefCell;
use std::collections::HashMap;

/// Joint state distribution for one subset size, advanced row by row.
#[derive(Debug, Clone)]
pub struct SubsetChain {
    pub n: usize,
    pub d: usize,
    q: u16,
    coverage: bool,
    /// probabilities indexed `[rho][delta][u]`; `u` is a singleton 0 when
    /// coverage tracking is off
    state: Vec<Vec<Vec<f64>>>,
    pub steps: usize,
}

/// Per-(q, p) transition ingredients, memoized across chains and steps.
#[derive(Debug, Clone)]
pub struct StepLaw {
    pub q: u16,
    pub p: f64,
    law: SpanLaw,
    decomp_cache: RefCell<HashMap<(usize, usize), SpanDecomp>>,
    pin_cache: RefCell<HashMap<(usize, usize, usize, usize), f64>>,
    span_cache: RefCell<HashMap<(u64, usize, usize), f64>>,
}

impl StepLaw {
    /// Constant-density law: new row and span rows share density `p`.
    pub fn uniform(q: u16, p: f64) -> StepLaw {
        StepLaw::from_span(q, p, SpanLaw::uniform(q, p))
    }

    /// Mixed law: the incoming row has density `p_new`; the held span is
    /// modeled at density `p_span` (used for realized tuning schedules).
    pub fn mixed(q: u16, p_new: f64, p_span: f64) -> StepLaw {
        StepLaw::from_span(q, p_new, SpanLaw::mixed(q, p_new, p_span))
    }

    /// Exact-weight rows over length `n` (constrained-mode transmission).
    /// `pair_targets` counts held directions with the same weight (candidate
    /// exact duplicates).
    pub fn constrained(q: u16, p_new: f64, p_span: f64, n: usize, pair_targets: usize) -> StepLaw {
        StepLaw::from_span(q, p_new, SpanLaw::constrained(q, p_new, p_span, n, pair_targets))
    }

    fn from_span(q: u16, p: f64, law: SpanLaw) -> StepLaw {
        StepLaw {
            q,
            p,
            law,
            decomp_cache: RefCell::new(HashMap::new()),
            pin_cache: RefCell::new(HashMap::new()),
            span_cache: RefCell::new(HashMap::new()),
        }
    }

    fn in_span(&self, c: usize, rho: usize) -> f64 {
        self.decompose(c, rho).pi
    }

    fn decompose(&self, c: usize, rho: usize) -> SpanDecomp {
        if let Some(d) = self.decomp_cache.borrow().get(&(c, rho)) {
            return d.clone();
        }
        let d = self.law.decompose(c, rho);
        self.decomp_cache.borrow_mut().insert((c, rho), d.clone());
        d
    }

    fn uniform_in_span(&self, p: f64, c: usize, rho: usize) -> f64 {
        let key = (p.to_bits(), c, rho);
        if let Some(&v) = self.span_cache.borrow().get(&key) {
            return v;
        }
        let v = SpanLaw::uniform(self.q, p).in_span(c, rho);
        self.span_cache.borrow_mut().insert(key, v);
        v
    }
}

impl SubsetChain {
    pub fn new(n: usize, d: usize, q: u16) -> SubsetChain {
        let c = n - d;
        let coverage = q > 2;
        let ulen = if coverage { c + 1 } else { 1 };
        let mut state = vec![vec![vec![0.0; ulen]; d + 1]; c + 1];
        state[0][0][if coverage { c } else { 0 }] = 1.0;
        SubsetChain { n, d, q, coverage, state, steps: 0 }
    }

    /// P(delta = d'), marginal.
    pub fn delta_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.d + 1];
        for row in &self.state {
            for (delta, us) in row.iter().enumerate() {
                out[delta] += us.iter().sum::<f64>();
            }
        }
        out
    }

    /// P(rank(M) = r) with r = rho + delta.
    pub fn rank_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n + 1];
        for (rho, row) in self.state.iter().enumerate() {
            for (delta, us) in row.iter().enumerate() {
                out[rho + delta] += us.iter().sum::<f64>();
            }
        }
        out
    }

    /// P(delta = d AND rank = r) and P(rank = r) for this chain.
    pub fn g_parts(&self, r: usize) -> (f64, f64) {
        let mut pinned = 0.0;
        let mut total = 0.0;
        for delta in 0..=self.d {
            if r < delta {
                continue;
            }
            let rho = r - delta;
            if rho >= self.state.len() {
                continue;
            }
            let mass: f64 = self.state[rho][delta].iter().sum();
            total += mass;
            if delta == self.d {
                pinned += mass;
            }
        }
        (pinned, total)
    }

    /// Advance one received row of exact weight `w = round(n * law.p)` whose
    /// support is a uniform w-subset (constrained mode). Support events are
    /// split exactly: touch uncovered sub-columns (extends sub-rank, covers),
    /// land inside the covered region (span test), or sit entirely on the
    /// deleted coordinates (zero sub-row, residual pins directly).
    pub fn step_constrained(&mut self, law: &StepLaw, n_full: usize) {
        use crate::model::gamma::log_binomial;
        let (n, d) = (self.n, self.d);
        debug_assert_eq!(n, n_full);
        let c = n - d;
        let w = ((n as f64 * law.p).round() as usize).clamp(1, n);
        let ulen = if self.coverage { c + 1 } else { 1 };
        let mut new = vec![vec![vec![0.0; ulen]; d + 1]; c + 1];
        let log_cnw = log_binomial(n, w);
        let choose = |a: usize, b: usize| -> f64 {
            if b > a {
                0.0
            } else {
                (log_binomial(a, b) - log_cnw).exp()
            }
        };
        for u in 0..ulen {
            let ucount = if self.coverage { u } else { 0 };
            let covered = c - ucount;
            // support misses the uncovered sub-columns entirely
            let miss_unc = choose(n - ucount, w);
            let m_touch = 1.0 - miss_unc;
            let _ = m_touch;
            // support entirely on the deleted coordinates: zero sub-row
            let m_in_s = choose(d, w);
            let m_cov = (miss_unc - m_in_s).max(0.0);
            for rho in 0..=covered.min(c) {
                let decomp = law.decompose(covered, rho);
                // absolute in-span mass inside the covered branch, attributed
                // waterfall-style: exact duplicates (zero S-residual) first,
                // dense/higher combination mass only for the remainder
                let mut left = m_cov;
                let mut attributed = Vec::with_capacity(decomp.parts.len());
                attributed.push(0.0); // zero-on-covered part is m_in_s, handled separately
                for &part in decomp.parts.iter().skip(1) {
                    let take = part.min(left);
                    attributed.push(take);
                    left -= take;
                }
                let span_abs: f64 = attributed.iter().sum();
                let extend_abs = (m_cov - span_abs).max(0.0);
                for delta in 0..=d {
                    let pr = self.state[rho][delta][u];
                    if pr == 0.0 {
                        continue;
                    }
                    if extend_abs > 0.0 && rho + 1 <= c {
                        new[rho + 1][delta][u] += pr * extend_abs;
                    }
                    if self.coverage && ucount > 0 && m_touch > 0.0 {
                        for k in 1..=ucount.min(w) {
                            let pk = (log_binomial(ucount, k)
                                + log_binomial(n - ucount, w - k)
                                - log_cnw)
                                .exp();
                            if pk > 0.0 {
                                new[(rho + 1).min(c)][delta][u - k] += pr * pk;
                            }
                        }
                    } else if !self.coverage || ucount == 0 {
                        // no uncovered columns to touch; m_touch = 0
                    }
                    // support on S only: residual is the whole row, pins a new
                    // dimension unless it already lies in the pinned subspace
                    if m_in_s > 0.0 {
                        if delta < d {
                            let escape = if delta == 0 {
                                1.0
                            } else {
                                let p_u = (w as f64 / d as f64).min(1.0 - 1.0 / self.q as f64);
                                1.0 - law.uniform_in_span(p_u, d, delta)
                            };
                            new[rho][delta + 1][u] += pr * m_in_s * escape;
                            new[rho][delta][u] += pr * m_in_s * (1.0 - escape);
                        } else {
                            new[rho][delta][u] += pr * m_in_s;
                        }
                    }
                    // inside the covered span: pair/dense patterns; the pair
                    // residual is the held direction's S-part (zero for
                    // directions supported in the covered region): no pin
                    if span_abs > 0.0 {
                        if delta < d {
                            let mut pin = 0.0;
                            for (k, &mass) in attributed.iter().enumerate().skip(2) {
                                if mass == 0.0 {
                                    continue;
                                }
                                let p_u = law
                                    .law
                                    .residual_density(k)
                                    .clamp(1e-12, 1.0 - 1.0 / self.q as f64);
                                pin += mass * (1.0 - law.uniform_in_span(p_u, d, delta));
                            }
                            new[rho][delta + 1][u] += pr * pin;
                            new[rho][delta][u] += pr * (span_abs - pin);
                        } else {
                            new[rho][delta][u] += pr * span_abs;
                        }
                    }
                }
            }
        }
        self.state = new;
        self.steps += 1;
    }

    /// Advance one received row drawn under `law.p`.
    ///
    /// With `row_nonzero_conditioned` the all-zero row (probability
    /// `(1-p)^n`, a pure self-transition: in span, zero residual) is removed
    /// and the step renormalized; constrained-mode rows are never all-zero.
    pub fn step(&mut self, law: &StepLaw, row_nonzero_conditioned: bool) {
        let (n, d) = (self.n, self.d);
        let c = n - d;
        let p = law.p;
        let ulen = if self.coverage { c + 1 } else { 1 };
        let mut new = vec![vec![vec![0.0; ulen]; d + 1]; c + 1];
        for u in 0..ulen {
            let ucount = if self.coverage { u } else { 0 };
            let gate = (1.0 - p).powi(ucount as i32);
            let covered = c - ucount;
            for rho in 0..=covered.min(c) {
                let pi_in = if rho < covered { law.in_span(covered, rho) } else { 1.0 };
                let a_in = gate * (1.0 - pi_in);
                let spanp = gate * pi_in;
                for delta in 0..=d {
                    let pr = self.state[rho][delta][u];
                    if pr == 0.0 {
                        continue;
                    }
                    // rank extension within covered columns
                    if a_in > 0.0 && rho + 1 <= c {
                        new[rho + 1][delta][u] += pr * a_in;
                    }
                    // touching uncovered columns: always extends, covers K >= 1
                    if self.coverage && ucount > 0 {
                        for k in 1..=ucount {
                            let pk = binomial(ucount, k)
                                * p.powi(k as i32)
                                * (1.0 - p).powi((ucount - k) as i32);
                            if pk > 0.0 {
                                new[(rho + 1).min(c)][delta][u - k] += pr * pk;
                            }
                        }
                    }
                    // fully inside the current span region: pin or stay
                    if spanp > 0.0 {
                        if delta < d {
                            let b = self.pin_rate(law, covered, rho, delta);
                            new[rho][delta + 1][u] += pr * spanp * b;
                            new[rho][delta][u] += pr * spanp * (1.0 - b);
                        } else {
                            new[rho][delta][u] += pr * spanp;
                        }
                    }
                }
            }
        }
        if row_nonzero_conditioned {
            let zmass = (1.0 - p).powi(n as i32);
            let norm = 1.0 - zmass;
            if norm > 0.0 {
                for (rho, row) in new.iter_mut().enumerate() {
                    for (delta, us) in row.iter_mut().enumerate() {
                        for (u, slot) in us.iter_mut().enumerate() {
                            *slot = (*slot - self.state[rho][delta][u] * zmass).max(0.0) / norm;
                        }
                    }
                }
            }
        }
        self.state = new;
        self.steps += 1;
    }

    /// Probability that a row lying in the sub-span pins a new dimension:
    /// mixture over the span-membership pattern of the residual left on the
    /// d deleted coordinates.
    fn pin_rate(&self, law: &StepLaw, covered: usize, rho: usize, delta: usize) -> f64 {
        let d = self.d;
        if delta >= d {
            return 0.0;
        }
        let key = (d, covered, rho, delta);
        if let Some(&v) = law.pin_cache.borrow().get(&key) {
            return v;
        }
        let decomp = law.decompose(covered, rho);
        let total: f64 = decomp.parts.iter().sum();
        let b = if total <= 0.0 {
            // degenerate: treat the residual as a fresh sparse vector
            1.0 - law.uniform_in_span(law.p, d, delta)
        } else {
            let mut acc = 0.0;
            for (k, &w) in decomp.parts.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let p_u = law.law.residual_density(k).clamp(1e-12, 1.0 - 1.0 / self.q as f64);
                acc += (w / total) * (1.0 - law.uniform_in_span(p_u, d, delta));
            }
            acc
        };
        law.pin_cache.borrow_mut().insert(key, b);
        b
    }
}

/// Cache of advanced chains for a constant-density scenario.
#[derive(Debug)]
pub struct ChainSet {
    n: usize,
    q: u16,
    law: StepLaw,
    chains: Vec<SubsetChain>,
    /// snapshots[d][m] = (delta-pinned joint by rank, rank marginal) at m rows
    snapshots: Vec<Vec<(Vec<f64>, Vec<f64>)>>,
}

impl ChainSet {
    pub fn new(n: usize, q: u16, p: f64) -> ChainSet {
        let law = StepLaw::uniform(q, p);
        let chains = (0..=n).map(|d| SubsetChain::new(n, d, q)).collect();
        let snapshots = (0..=n)
            .map(|d| {
                let ch = SubsetChain::new(n, d, q);
                vec![snapshot(&ch)]
            })
            .collect();
        ChainSet { n, q, law, chains, snapshots }
    }

    fn ensure(&mut self, d: usize, m: usize) {
        while self.snapshots[d].len() <= m {
            self.chains[d].step(&self.law, false);
            let snap = snapshot(&self.chains[d]);
            self.snapshots[d].push(snap);
        }
    }

    /// (P(delta = d, rank = r), P(rank = r)) for subset size d after m rows.
    pub fn g_parts(&mut self, d: usize, r: usize, m: usize) -> (f64, f64) {
        self.ensure(d, m);
        let (by_rank, marg) = &self.snapshots[d][m];
        let pinned = by_rank.get(r).copied().unwrap_or(0.0);
        let total = marg.get(r).copied().unwrap_or(0.0);
        (pinned, total)
    }

    /// Rank distribution of the full matrix (d = 0 chain) after m rows.
    pub fn rank_distribution(&mut self, m: usize) -> Vec<f64> {
        self.ensure(0, m);
        self.snapshots[0][m].1.clone()
    }

    /// Expected decoded count after m rows: n * P(delta = 1) from the d = 1 chain.
    pub fn expected_decoded(&mut self, m: usize) -> f64 {
        self.ensure(1, m);
        let pinned: f64 = self.snapshots[1][m].0.iter().sum();
        self.n as f64 * pinned
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> u16 {
        self.q
    }
}

fn snapshot(ch: &SubsetChain) -> (Vec<f64>, Vec<f64>) {
    let marg = ch.rank_marginal();
    let mut pinned = vec![0.0; ch.n + 1];
    for r in 0..=ch.n {
        let (p, _) = ch.g_parts(r);
        pinned[r] = p;
    }
    (pinned, marg)
}

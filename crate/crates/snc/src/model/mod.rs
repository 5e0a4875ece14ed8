//! Analytical engine: rank distribution of sparse GF(q) matrices and the
//! partial-decoding probabilities P(X = x | M = m) / P(X >= x | M = m).
//!
//! The probability that a specific set S of d sources is decoded, given rank
//! and row count, is read off a per-subset-size Markov chain (see [`chain`]).
//! Those probabilities are the normalized factorial moments of the decoded
//! count X, so the conditional distribution of X is recovered by non-negative
//! least squares on the moment system instead of the raw inclusion-exclusion
//! sum, whose alternating binomial weights amplify approximation error beyond
//! use at realistic generation sizes. The raw inclusion-exclusion form is kept
//! as [`Model::prob_exact_given_rank_ie`].

pub mod chain;
pub mod gamma;
pub mod nnls;
pub mod span;

use crate::codec::SncParams;
use crate::{Error, Result};
use chain::ChainSet;
use gamma::{binomial, gamma_binomial, log_binomial};

pub use gamma::gamma_binomial as gamma_binom;

/// Rank probabilities [P_m^0 .. P_m^min(m,n)] after m received rows.
#[derive(Debug, Clone)]
pub struct RankDistribution {
    pub m: usize,
    pub probs: Vec<f64>,
}

/// P_i^full for i = 0..=n: probability that i received rows are independent.
#[derive(Debug, Clone)]
pub struct FullRankCurve {
    pub values: Vec<f64>,
}

/// Grids P(X = x | M = m) and P(X >= x | M = m) for x in 0..=n, m in 0..=m_max.
#[derive(Debug, Clone)]
pub struct PartialDecodingTable {
    pub n: usize,
    pub m_max: usize,
    /// exact[m][x]
    pub exact: Vec<Vec<f64>>,
    /// at_least[m][x], monotonicity-repaired
    pub at_least: Vec<Vec<f64>>,
    /// largest monotonicity violation absorbed by the repair (diagnostic)
    pub repair_magnitude: f64,
}

/// Analytical model for one (n, q, p) scenario. Caches chain state internally;
/// build once per scenario and query freely.
pub struct Model {
    n: usize,
    q: u16,
    p: f64,
    chains: ChainSet,
}

impl Model {
    pub fn q(&self) -> u16 {
        self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

impl Model {
    pub fn new(params: &SncParams) -> Model {
        Model::from_parts(params.n, params.field.q(), params.p)
    }

    pub fn from_parts(n: usize, q: u16, p: f64) -> Model {
        Model { n, q, p, chains: ChainSet::new(n, q, p) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Probability that `i` rows drawn at this density are linearly
    /// independent (the diagonal of the rank recursion).
    pub fn full_rank_prob(&mut self, i: usize) -> f64 {
        if i > self.n {
            return 0.0;
        }
        let rd = self.chains.rank_distribution(i);
        rd.get(i).copied().unwrap_or(0.0)
    }

    pub fn full_rank_curve(&mut self) -> FullRankCurve {
        FullRankCurve { values: (0..=self.n).map(|i| self.full_rank_prob(i)).collect() }
    }

    /// Rank distribution after m received rows.
    pub fn rank_distribution(&mut self, m: usize) -> RankDistribution {
        let probs = self.chains.rank_distribution(m);
        RankDistribution { m, probs: probs[..=m.min(self.n)].to_vec() }
    }

    /// Residual density P_x: expected nonzero probability of the remaining
    /// rows after Gauss-Jordan eliminated x decoded sources.
    ///
    /// Exact hypergeometric weights when the row weight n*p is integral;
    /// gamma-form binomials otherwise (terms with negative np - l contribute
    /// through the gamma form).
    pub fn residual_density(&self, x: usize) -> Result<f64> {
        residual_density(self.n, self.p, x)
    }

    /// P(a specific size-d source subset is fully decoded | rank r, m rows).
    pub fn subset_decoded_given_rank(&mut self, d: usize, r: usize, m: usize) -> f64 {
        if d == 0 {
            return 1.0;
        }
        if d > r.min(self.n).min(m) || r > self.n.min(m) {
            return 0.0;
        }
        let (pinned, total) = self.chains.g_parts(d, r, m);
        if total <= 0.0 {
            0.0
        } else {
            (pinned / total).clamp(0.0, 1.0)
        }
    }

    /// Raw inclusion-exclusion form of P(X = x | R = r, M = m), clamped to
    /// [0, 1]. Reliable for small n; at larger n the alternating sum amplifies
    /// model error and the moment inversion below should be used instead.
    pub fn prob_exact_given_rank_ie(&mut self, x: usize, r: usize, m: usize) -> f64 {
        if r > self.n.min(m) {
            return 0.0;
        }
        if x > r.min(self.n) {
            return 0.0;
        }
        let hi = (self.n - x).min(r - x);
        let mut acc = 0.0f64;
        for j in 0..=hi {
            let term = binomial(self.n - x, j) * self.subset_decoded_given_rank(x + j, r, m);
            if j % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        (binomial(self.n, x) * acc).clamp(0.0, 1.0)
    }

    /// P(X = x | R = r, M = m) for all x via stable factorial-moment
    /// inversion: sum_x C(x,d)/C(n,d) P(x) = g(d) for d = 0..=min(r, n, m).
    pub fn dist_given_rank(&mut self, r: usize, m: usize) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n + 1];
        if r > n.min(m) {
            return out;
        }
        let top = r.min(n).min(m);
        if top == 0 {
            out[0] = 1.0;
            return out;
        }
        let rows = top + 2;
        let cols = top + 1;
        let mut a = vec![0.0; rows * cols];
        let mut b = vec![0.0; rows];
        for d in 0..=top {
            for x in d..=top {
                a[d * cols + x] = (log_binomial(x, d) - log_binomial(n, d)).exp();
            }
            b[d] = self.subset_decoded_given_rank(d, r, m);
        }
        // heavily weight total mass and the d = 0 row
        for x in 0..cols {
            a[(top + 1) * cols + x] = 10.0;
            a[x] *= 10.0;
        }
        b[top + 1] = 10.0;
        b[0] *= 10.0;
        let sol = nnls::nnls(&a, rows, cols, &b);
        let s: f64 = sol.iter().sum();
        if s > 0.0 {
            for (x, v) in sol.iter().enumerate() {
                out[x] = v / s;
            }
        } else {
            out[0] = 1.0;
        }
        out
    }

    /// P(X = x | M = m) column for all x (rank-mixed, clamped).
    pub fn exact_column(&mut self, m: usize) -> Vec<f64> {
        let rd = self.chains.rank_distribution(m);
        let mut col = vec![0.0; self.n + 1];
        for (r, &pr) in rd.iter().enumerate() {
            if pr <= 1e-14 {
                continue;
            }
            let d = self.dist_given_rank(r, m);
            for (x, v) in d.iter().enumerate() {
                col[x] += pr * v;
            }
        }
        for v in col.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        col
    }

    pub fn prob_exact(&mut self, x: usize, m: usize) -> f64 {
        if x > self.n {
            return 0.0;
        }
        self.exact_column(m)[x]
    }

    /// P(X >= x | M = m) as the suffix sum of the exact column.
    pub fn prob_at_least(&mut self, x: usize, m: usize) -> f64 {
        if x == 0 {
            return 1.0;
        }
        if x > self.n {
            return 0.0;
        }
        let col = self.exact_column(m);
        col[x..].iter().sum::<f64>().clamp(0.0, 1.0)
    }

    /// Erasure-channel variant: substitute the effective reception count
    /// round(m (1 - eps)) everywhere m appears.
    pub fn prob_exact_erasure(&mut self, x: usize, m: usize, epsilon: f64) -> f64 {
        let m_eff = ((m as f64) * (1.0 - epsilon)).round() as usize;
        self.prob_exact(x, m_eff)
    }

    pub fn prob_at_least_erasure(&mut self, x: usize, m: usize, epsilon: f64) -> f64 {
        let m_eff = ((m as f64) * (1.0 - epsilon)).round() as usize;
        self.prob_at_least(x, m_eff)
    }

    /// E(X | M = m): expected decoded sources after m received rows
    /// (n times the single-source decoding probability; no moment inversion).
    pub fn expected_decoded(&mut self, m: usize) -> f64 {
        self.chains.expected_decoded(m)
    }

    /// Full grid over m = 0..=m_max with monotonicity repair on the
    /// at-least rows (running maximum along m; violations are recorded).
    pub fn partial_decoding_table(&mut self, m_max: usize) -> PartialDecodingTable {
        let n = self.n;
        let mut exact = Vec::with_capacity(m_max + 1);
        let mut at_least = Vec::with_capacity(m_max + 1);
        for m in 0..=m_max {
            let col = self.exact_column(m);
            let mut al = vec![0.0; n + 1];
            let mut acc = 0.0;
            for x in (0..=n).rev() {
                acc += col[x];
                al[x] = acc.clamp(0.0, 1.0);
            }
            al[0] = 1.0;
            exact.push(col);
            at_least.push(al);
        }
        // monotone in m: running maximum per x
        let mut repair: f64 = 0.0;
        for x in 0..=n {
            let mut run = 0.0f64;
            for m in 0..=m_max {
                if at_least[m][x] < run {
                    repair = repair.max(run - at_least[m][x]);
                    at_least[m][x] = run;
                } else {
                    run = at_least[m][x];
                }
            }
        }
        PartialDecodingTable { n, m_max, exact, at_least, repair_magnitude: repair }
    }
}

/// Residual density after x decoded sources (free function used by tests).
pub fn residual_density(n: usize, p: f64, x: usize) -> Result<f64> {
    if x > n {
        return Err(Error::BadParams(format!("residual density needs x <= n, got {x} > {n}")));
    }
    let np = n as f64 * p;
    let w_int = np.round();
    let integral = (np - w_int).abs() < 1e-9;
    let mut acc = 0.0f64;
    for l in 0..=x {
        let weight = (np - l as f64) / n as f64;
        let p_lx = if integral {
            let w = w_int as usize;
            if l > w || l > x {
                0.0
            } else {
                // C(x,l) C(n-x, w-l) / C(n, w), exact
                if w < l || n - x < w - l {
                    0.0
                } else {
                    binomial(x, l) * binomial(n - x, w - l) / binomial(n, w)
                }
            }
        } else {
            let num = gamma_binomial((n - x) as f64, np - l as f64)?;
            let den = gamma_binomial(n as f64, np)?;
            binomial(x, l) * num / den
        };
        acc += weight * p_lx;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_density_examples() {
        // x = 0 leaves the density unchanged
        assert!((residual_density(32, 2.0 / 32.0, 0).unwrap() - 2.0 / 32.0).abs() < 1e-12);
        // n=32, w=2, x=1: (2/32)(C(31,2)/C(32,2)) + (1/32)(C(1,1)C(31,1)/C(32,2))
        let expect = (2.0 / 32.0) * (465.0 / 496.0) + (1.0 / 32.0) * (31.0 / 496.0);
        let got = residual_density(32, 2.0 / 32.0, 1).unwrap();
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
        // expectation-linear closed form: P_x = p (n - x) / n for integral w
        for x in 0..=32 {
            let got = residual_density(32, 2.0 / 32.0, x).unwrap();
            let lin = (2.0 / 32.0) * (32.0 - x as f64) / 32.0;
            assert!((got - lin).abs() < 1e-10, "x={x}: {got} vs {lin}");
        }
        // x = n: fully decoded system has residual density zero
        assert!(residual_density(32, 2.0 / 32.0, 32).unwrap().abs() < 1e-12);
    }

    #[test]
    fn residual_density_gamma_fallback() {
        // non-integral n*p goes through the gamma form and stays close to the
        // linear-decay value
        let v = residual_density(3, 0.5, 1).unwrap();
        assert!((v - 0.5 * 2.0 / 3.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn rank_distribution_base_cases() {
        let mut model = Model::from_parts(8, 2, 0.25);
        let rd0 = model.rank_distribution(0);
        assert_eq!(rd0.probs, vec![1.0]);
        let rd1 = model.rank_distribution(1);
        let p1full = 1.0 - 0.75f64.powi(8);
        assert!((rd1.probs[1] - p1full).abs() < 1e-12);
        assert!((rd1.probs[0] - (1.0 - p1full)).abs() < 1e-12);
        assert!((model.full_rank_prob(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_distribution_normalizes() {
        for q in [2u16, 16, 256] {
            let mut model = Model::from_parts(16, q, 0.2);
            for m in [0usize, 3, 16, 32] {
                let s: f64 = model.rank_distribution(m).probs.iter().sum();
                assert!((s - 1.0).abs() < 1e-9, "q={q} m={m}");
            }
        }
    }

    #[test]
    fn dense_limit_matches_exact_rank_law() {
        // q = 256, p = 1 - 1/q: P_i^full must match prod_{k<i} (1 - q^{k-n})
        let n = 32;
        let q = 256u16;
        let mut model = Model::from_parts(n, q, 1.0 - 1.0 / q as f64);
        for i in 0..=n {
            let mut oracle = 1.0f64;
            for k in 0..i {
                oracle *= 1.0 - (q as f64).powi(k as i32 - n as i32);
            }
            let got = model.full_rank_prob(i);
            assert!((got - oracle).abs() < 0.02, "i={i}: {got} vs {oracle}");
        }
    }

    #[test]
    fn trivial_conditionals() {
        let mut model = Model::from_parts(6, 2, 0.4);
        // empty matrix decodes nothing with certainty
        assert!((model.prob_exact_given_rank_ie(0, 0, 0) - 1.0).abs() < 1e-12);
        let d = model.dist_given_rank(0, 0);
        assert!((d[0] - 1.0).abs() < 1e-12);
        // full rank of a square system decodes everything
        let d = model.dist_given_rank(6, 6);
        assert!((d[6] - 1.0).abs() < 1e-6, "{:?}", d);
        assert!((model.prob_exact_given_rank_ie(6, 6, 6) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn at_least_column_properties() {
        let mut model = Model::from_parts(8, 16, 0.25);
        for m in [1usize, 4, 10] {
            assert!((model.prob_at_least(0, m) - 1.0).abs() < 1e-12);
            let col = model.exact_column(m);
            let s: f64 = col.iter().sum();
            assert!((s - 1.0).abs() < 0.05, "m={m} sum={s}");
            // non-increasing in x
            let mut last = 1.0;
            for x in 0..=8 {
                let v = model.prob_at_least(x, m);
                assert!(v <= last + 1e-9);
                last = v;
            }
        }
    }

    #[test]
    fn erasure_reduces_to_plain_at_zero() {
        let mut model = Model::from_parts(8, 2, 0.25);
        for m in [2usize, 6] {
            for x in 0..=8 {
                assert_eq!(model.prob_exact_erasure(x, m, 0.0), model.prob_exact(x, m));
            }
        }
        // definitional: eps substitutes the rounded effective count
        let lhs = model.prob_exact_erasure(1, 20, 0.3);
        let rhs = model.prob_exact(1, 14);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn expected_decoded_limits() {
        let mut model = Model::from_parts(8, 16, 1.0 - 1.0 / 16.0);
        assert!(model.expected_decoded(0) < 1e-12);
        assert!(model.expected_decoded(40) > 7.9);
    }

    #[test]
    fn model_spot_value_fig1a() {
        // n=32, q=2, w=2: P(X >= 1 | M = 5) near 0.79
        let mut model = Model::from_parts(32, 2, 2.0 / 32.0);
        let v = model.prob_at_least(1, 5);
        assert!((v - 0.79).abs() < 0.02, "P(X>=1|M=5) = {v}");
    }
}

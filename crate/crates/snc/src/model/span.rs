//! Span-membership probabilities for sparse random vectors over GF(q).
//!
//! The central primitive is `in_span(q, p, c, rho)`: the probability that a
//! fresh length-`c` vector with iid coefficients (zero with probability
//! `1 - p`, otherwise uniform nonzero) falls inside the span of `rho`
//! previously received, linearly independent vectors of the same law.
//!
//! Given independence of the span vectors, the events "the new vector equals a
//! particular span element" are mutually exclusive, so the membership
//! probability is an additive union over combination patterns. Over GF(2) the
//! union is evaluated in full via a connected-pattern decomposition; for larger
//! fields the k >= 3 patterns are dominated by exact coefficient matching and
//! are replaced by the dense tail, which keeps the dense limit `q^(rho-c)`
//! exact.

use super::gamma::log_binomial;

/// Probability that a fixed nontrivial combination of `k` iid sparse
/// coefficients sums to zero (single coordinate).
///
/// `lambda_new` and `lambda_span` are the per-vector factors `1 - qp/(q-1)`;
/// one coefficient comes from the new vector, the other `k - 1` from span
/// vectors (they differ when modeling mixed-density rows).
#[inline]
pub fn chi_mixed(q: f64, lambda_new: f64, lambda_span: f64, k: usize) -> f64 {
    debug_assert!(k >= 1);
    1.0 / q + (1.0 - 1.0 / q) * lambda_new * lambda_span.powi(k as i32 - 1)
}

#[inline]
pub fn lambda(q: f64, p: f64) -> f64 {
    1.0 - q * p / (q - 1.0)
}

/// Per-combination-size masses of the in-span probability.
///
/// `parts[k]` is the mass from patterns involving `k` span vectors (k = 0 is
/// the all-zero new vector). The total is capped at one, scaling parts along.
#[derive(Debug, Clone)]
pub struct SpanDecomp {
    pub pi: f64,
    pub parts: Vec<f64>,
}

/// Engine for in-span probabilities at fixed (q, p) pairs, mixed-density aware.
#[derive(Debug, Clone, Copy)]
pub struct SpanLaw {
    pub q: f64,
    /// density of the new (incoming) vector
    pub p_new: f64,
    /// density modeling the already-held span vectors
    pub p_span: f64,
    /// rows carry exactly round(n*p) nonzeros over this full length
    /// (constrained mode); changes the support statistics
    pub constrained_n: Option<usize>,
    /// number of held directions that are plausible exact duplicates of the
    /// incoming row (same weight); defaults to the whole span
    pub pair_targets: Option<usize>,
}

impl SpanLaw {
    pub fn uniform(q: u16, p: f64) -> SpanLaw {
        SpanLaw { q: q as f64, p_new: p, p_span: p, constrained_n: None, pair_targets: None }
    }

    pub fn mixed(q: u16, p_new: f64, p_span: f64) -> SpanLaw {
        SpanLaw { q: q as f64, p_new, p_span, constrained_n: None, pair_targets: None }
    }

    pub fn constrained(q: u16, p_new: f64, p_span: f64, n: usize, pair_targets: usize) -> SpanLaw {
        SpanLaw { q: q as f64, p_new, p_span, constrained_n: Some(n), pair_targets: Some(pair_targets) }
    }

    pub fn weight_new(&self) -> Option<usize> {
        self.constrained_n.map(|n| ((n as f64 * self.p_new).round() as usize).clamp(1, n))
    }

    pub fn weight_span(&self) -> Option<usize> {
        self.constrained_n.map(|n| ((n as f64 * self.p_span).round() as usize).clamp(1, n))
    }

    fn chi(&self, k: usize) -> f64 {
        chi_mixed(self.q, lambda(self.q, self.p_new), lambda(self.q, self.p_span), k)
    }

    /// Decomposed in-span probability for `c` coordinates and span rank `rho`.
    pub fn decompose(&self, c: usize, rho: usize) -> SpanDecomp {
        let q = self.q;
        if c == 0 {
            return SpanDecomp { pi: 1.0, parts: vec![1.0] };
        }
        if let Some(n) = self.constrained_n {
            return self.decompose_constrained(n, c, rho);
        }
        let c1 = (1.0 - self.p_new).powi(c as i32);
        if rho == 0 {
            return SpanDecomp { pi: c1, parts: vec![c1] };
        }
        let mut parts;
        if q == 2.0 {
            // connected-pattern union: E_k = chi_k^c decomposes over set
            // partitions into connected blocks Dhat via
            //   E_k = sum_s C(k-1, s-1) Dhat_s E_{k-s}
            let kmax = rho + 1;
            let mut e = Vec::with_capacity(kmax + 1);
            e.push(1.0);
            for k in 1..=kmax {
                e.push(self.chi(k).powi(c as i32));
            }
            let mut dhat = vec![0.0f64; kmax + 1];
            for k in 1..=kmax {
                let mut v = e[k];
                for s in 1..k {
                    v -= binom_f(k - 1, s - 1) * dhat[s] * e[k - s];
                }
                dhat[k] = v.max(0.0);
            }
            let c1z = dhat[1];
            parts = vec![c1z];
            let log_nz = if c1z < 1.0 { (1.0 - c1z).ln() } else { 0.0 };
            for k in 2..=rho + 1 {
                if dhat[k] > 0.0 && c1z < 1.0 {
                    let lt = log_binomial(rho, k - 1) + dhat[k].ln() - (k as f64 - 1.0) * log_nz;
                    parts.push(lt.min(700.0).exp());
                } else {
                    parts.push(0.0);
                }
            }
        } else {
            // zero vector + proportional pairs + exact dense tail
            let pair = (self.chi(2).powi(c as i32) - c1 * (1.0 - self.p_span).powi(c as i32)).max(0.0);
            let s2 = if c1 < 1.0 {
                rho as f64 * (q - 1.0) * pair / (1.0 - c1)
            } else {
                0.0
            };
            let dense_tail =
                (q.powi(rho as i32 - c as i32) - q.powi(-(c as i32)) * (1.0 + rho as f64 * (q - 1.0))).max(0.0);
            parts = vec![c1, s2, dense_tail];
        }
        let mut pi: f64 = parts.iter().sum();
        if pi > 1.0 {
            for x in parts.iter_mut() {
                *x /= pi;
            }
            pi = 1.0;
        }
        SpanDecomp { pi, parts }
    }

    /// Constrained-row variant: supports are exact-weight draws over the full
    /// length `n`, so the "vanishes on these c coordinates" and "duplicates a
    /// span direction" masses are hypergeometric/coupon terms instead of
    /// Bernoulli products. Higher-order patterns keep the Bernoulli
    /// approximation (they matter at q = 2 mid-weights where the laws agree).
    fn decompose_constrained(&self, n: usize, c: usize, rho: usize) -> SpanDecomp {
        let q = self.q;
        let w = self.weight_new().unwrap();
        // support entirely outside the c coordinates
        let zero_on_c = hyper_all_outside(n, w, c);
        let mut parts = vec![zero_on_c];
        if rho >= 1 {
            // duplicate of one held direction: supports coincide (1/C(c, w),
            // the held support approximated uniform in the region) and the w
            // coefficient ratios match ((q-1)^(1-w) over the free scalar)
            let targets = self.pair_targets.unwrap_or(rho).min(rho);
            let pair = if w <= c && targets > 0 {
                targets as f64 * ((1.0 - w as f64) * (q - 1.0).ln() - log_binomial(c, w)).exp()
            } else {
                0.0
            };
            parts.push(pair);
            if q == 2.0 {
                // higher-order connected patterns from the Bernoulli law
                let bern = SpanLaw { constrained_n: None, ..*self };
                let full = bern.decompose(c, rho);
                for k in 2..full.parts.len() {
                    parts.push(full.parts[k]);
                }
            } else {
                let dense_tail = (q.powi(rho as i32 - c as i32)
                    - q.powi(-(c as i32)) * (1.0 + rho as f64 * (q - 1.0)))
                .max(0.0);
                parts.push(dense_tail);
            }
        }
        let mut pi: f64 = parts.iter().sum();
        if pi > 1.0 {
            for x in parts.iter_mut() {
                *x /= pi;
            }
            pi = 1.0;
        }
        SpanDecomp { pi, parts }
    }

    /// Plain in-span probability.
    pub fn in_span(&self, c: usize, rho: usize) -> f64 {
        self.decompose(c, rho).pi
    }

    /// Effective density of the residual a combination-part leaves on deleted
    /// coordinates: part `k` is a combination of `k + 1` sparse vectors.
    pub fn residual_density(&self, part: usize) -> f64 {
        if self.q == 2.0 || part < 2 {
            1.0 - self.chi(part + 1)
        } else {
            1.0 - 1.0 / self.q // dense-tail combination
        }
    }
}

fn binom_f(n: usize, k: usize) -> f64 {
    super::gamma::binomial(n, k)
}

/// P(an exact-weight-w support over n coordinates misses a fixed set of c):
/// C(n-c, w) / C(n, w).
pub fn hyper_all_outside(n: usize, w: usize, c: usize) -> f64 {
    if w + c > n {
        return 0.0;
    }
    (log_binomial(n - c, w) - log_binomial(n, w)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rank_span_is_the_zero_vector() {
        let law = SpanLaw::uniform(2, 0.25);
        let d = law.decompose(4, 0);
        assert!((d.pi - 0.75f64.powi(4)).abs() < 1e-12);
    }

    #[test]
    fn dense_limit_is_exact_for_large_q() {
        // the pair + dense-tail construction reproduces q^(rho-c) exactly;
        // the GF(2) connected union carries a small conditioning bias, so only
        // closeness is required there
        for q in [16u16, 256] {
            let law = SpanLaw::uniform(q, 1.0 - 1.0 / q as f64);
            for c in [4usize, 8, 32] {
                for rho in 0..c {
                    let expect = (q as f64).powi(rho as i32 - c as i32);
                    let got = law.in_span(c, rho);
                    assert!(
                        (got - expect).abs() < 1e-9 + 1e-9 * expect,
                        "q={q} c={c} rho={rho}: {got} vs {expect}"
                    );
                }
            }
        }
        let law = SpanLaw::uniform(2, 0.5);
        for c in [4usize, 8, 32] {
            for rho in 0..c {
                let expect = 2.0f64.powi(rho as i32 - c as i32);
                assert!((law.in_span(c, rho) - expect).abs() < 0.035, "c={c} rho={rho}");
            }
        }
    }

    #[test]
    fn matches_prototype_values() {
        // frozen from the validated reference implementation
        let law = SpanLaw::uniform(2, 2.0 / 32.0);
        assert!((law.in_span(32, 0) - 0.126_785_8).abs() < 1e-5);
        let law = SpanLaw::uniform(256, 2.0 / 32.0);
        let v10 = law.in_span(32, 10);
        let v30 = law.in_span(32, 30);
        assert!((v10 - 0.152_978).abs() < 1e-4, "{v10}");
        assert!((v30 - 0.205_373).abs() < 1e-4, "{v30}");
    }

    #[test]
    fn monotone_in_rank() {
        for q in [2u16, 16, 256] {
            let law = SpanLaw::uniform(q, 0.1);
            let mut last = 0.0;
            for rho in 0..=16 {
                let v = law.in_span(16, rho);
                assert!(v >= last - 1e-12, "q={q} rho={rho}");
                assert!((0.0..=1.0).contains(&v));
                last = v;
            }
        }
    }
}

//! Sparse encoder and incremental Gauss-Jordan decoder.
//!
//! Coding vectors are drawn either fully at random (each coefficient is zero
//! with probability `1 - p`, otherwise uniform over the nonzero elements) or in
//! constrained mode with exactly `round(n*p)` nonzero coefficients in uniformly
//! random positions. The decoder keeps the received rows in reduced row echelon
//! form; source `i` is decoded exactly when the unit vector `e_i` lies in the
//! row space, i.e. when some RREF row has weight one.

use crate::gf::{FieldElement, FieldSpec};
use crate::rng::RandomStream;
use crate::{Error, Result};

/// How coefficients are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodingMode {
    /// Each coefficient independently nonzero with probability `p`. All-zero
    /// vectors are possible and are delivered (they waste a transmission).
    FullyRandom,
    /// Exactly `round(n*p)` nonzero coefficients in random positions.
    Constrained,
}

/// Complete parameterization of one scenario.
#[derive(Debug, Clone)]
pub struct SncParams {
    pub n: usize,
    pub field: FieldSpec,
    pub p: f64,
    pub epsilon: f64,
    pub mode: CodingMode,
}

impl SncParams {
    pub fn new(n: usize, field: FieldSpec, p: f64, epsilon: f64, mode: CodingMode) -> Result<SncParams> {
        let q = field.q() as f64;
        if n == 0 {
            return Err(Error::BadParams("generation size must be positive".into()));
        }
        if !(p > 0.0 && p <= 1.0 - 1.0 / q + 1e-12) {
            return Err(Error::BadParams(format!(
                "density p = {p} outside (0, 1 - 1/q] = (0, {}]",
                1.0 - 1.0 / q
            )));
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::BadParams(format!("erasure probability {epsilon} outside [0, 1)")));
        }
        if mode == CodingMode::Constrained {
            let w = (n as f64 * p).round_ties_even() as usize;
            if !(1..=n).contains(&w) {
                return Err(Error::BadParams(format!(
                    "constrained row weight round(n*p) = {w} outside [1, {n}]"
                )));
            }
        }
        Ok(SncParams { n, field, p, epsilon, mode })
    }

    /// Convenience constructor from an integer row weight `w` (`p = w/n`).
    pub fn from_weight(n: usize, field: FieldSpec, w: usize, epsilon: f64, mode: CodingMode) -> Result<SncParams> {
        SncParams::new(n, field, w as f64 / n as f64, epsilon, mode)
    }

    /// Constrained row weight, rounding ties to even.
    pub fn row_weight(&self) -> usize {
        (self.n as f64 * self.p).round_ties_even() as usize
    }

    /// RLNC density for this field.
    pub fn rlnc_density(q: u16) -> f64 {
        1.0 - 1.0 / q as f64
    }
}

/// A coded packet's coefficient row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingVector(pub Vec<FieldElement>);

impl CodingVector {
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|c| !c.is_zero()).count()
    }
}

/// Draw one coding vector at density `p`, honoring the params' mode.
pub fn draw_coding_vector(params: &SncParams, rng: &mut RandomStream) -> CodingVector {
    draw_with_density(params, params.p, rng)
}

/// Draw with an explicit per-packet density (used by tuning schedules).
pub fn draw_with_density(params: &SncParams, p: f64, rng: &mut RandomStream) -> CodingVector {
    let n = params.n;
    let q = params.field.q() as u64;
    let mut v = vec![FieldElement::ZERO; n];
    match params.mode {
        CodingMode::FullyRandom => {
            for slot in v.iter_mut() {
                if rng.next_f64() < p {
                    *slot = FieldElement(if q == 2 { 1 } else { 1 + rng.next_below(q - 1) as u8 });
                }
            }
        }
        CodingMode::Constrained => {
            let w = ((n as f64 * p).round_ties_even() as usize).clamp(1, n);
            let mut idx = Vec::new();
            rng.sample_indices(n, w, &mut idx);
            for i in idx {
                v[i] = FieldElement(if q == 2 { 1 } else { 1 + rng.next_below(q - 1) as u8 });
            }
        }
    }
    CodingVector(v)
}

/// Outcome of feeding one coding vector to the decoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceiveReport {
    pub rank_increased: bool,
    pub newly_decoded: Vec<usize>,
}

/// Gauss-Jordan reduced decoding matrix with decoded-source tracking.
///
/// Dependent rows are discarded; only rank and row space matter downstream.
/// Single-writer mutable: distinct trials use independent states.
#[derive(Debug, Clone)]
pub struct DecoderState {
    field: FieldSpec,
    n: usize,
    rows: Vec<Vec<FieldElement>>,
    pivot_cols: Vec<usize>, // pivot column of rows[i]
    decoded: Vec<bool>,
}

impl DecoderState {
    pub fn new(field: FieldSpec, n: usize) -> DecoderState {
        DecoderState {
            field,
            n,
            rows: Vec::with_capacity(n),
            pivot_cols: Vec::with_capacity(n),
            decoded: vec![false; n],
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn decoded(&self) -> &[bool] {
        &self.decoded
    }

    pub fn decoded_count(&self) -> usize {
        self.decoded.iter().filter(|&&d| d).count()
    }

    pub fn rref_rows(&self) -> &[Vec<FieldElement>] {
        &self.rows
    }

    pub fn is_complete(&self) -> bool {
        self.rank() == self.n
    }

    /// Reduce `v` against the current RREF, insert it if independent, and
    /// report rank change plus newly decoded sources.
    pub fn receive(&mut self, v: &CodingVector) -> Result<ReceiveReport> {
        if v.0.len() != self.n {
            return Err(Error::DimensionMismatch { got: v.0.len(), want: self.n });
        }
        let f = self.field.clone();
        let mut v = v.0.clone();
        // eliminate against existing pivots
        for (row, &pc) in self.rows.iter().zip(&self.pivot_cols) {
            let coef = v[pc];
            if !coef.is_zero() {
                for (dst, src) in v.iter_mut().zip(row.iter()) {
                    *dst = f.add(*dst, f.mul(coef, *src));
                }
            }
        }
        let Some(pc) = v.iter().position(|c| !c.is_zero()) else {
            return Ok(ReceiveReport { rank_increased: false, newly_decoded: Vec::new() });
        };
        // normalize pivot to 1
        let inv = f.inv(v[pc])?;
        if v[pc] != FieldElement::ONE {
            for c in v.iter_mut() {
                *c = f.mul(*c, inv);
            }
        }
        // back-substitute into existing rows
        for row in self.rows.iter_mut() {
            let coef = row[pc];
            if !coef.is_zero() {
                for (dst, src) in row.iter_mut().zip(v.iter()) {
                    *dst = f.add(*dst, f.mul(coef, *src));
                }
            }
        }
        self.rows.push(v);
        self.pivot_cols.push(pc);
        // a source is decoded when its pivot row collapsed to a unit vector
        let mut newly = Vec::new();
        for (row, &c) in self.rows.iter().zip(&self.pivot_cols) {
            if !self.decoded[c] && row.iter().filter(|x| !x.is_zero()).count() == 1 {
                self.decoded[c] = true;
                newly.push(c);
            }
        }
        newly.sort_unstable();
        Ok(ReceiveReport { rank_increased: true, newly_decoded: newly })
    }
}

/// Per-trial record from simulating `m` channel uses.
#[derive(Debug, Clone)]
pub struct TrialTrace {
    /// rank after each transmission (index 0 = after the first channel use)
    pub rank: Vec<usize>,
    /// decoded-source count after each transmission
    pub decoded_count: Vec<usize>,
    /// channel-use index (1-based, counting erased transmissions) at which each
    /// source was decoded; `None` if never
    pub decode_time: Vec<Option<usize>>,
    /// same, counting only delivered packets
    pub decode_time_delivered: Vec<Option<usize>>,
    pub delivered: usize,
}

/// Simulate `m` channel uses: each packet is independently erased with
/// probability `epsilon`; delivered packets go through the decoder.
pub fn run_transmission(params: &SncParams, m: usize, rng: &mut RandomStream) -> TrialTrace {
    let mut state = DecoderState::new(params.field.clone(), params.n);
    let mut trace = TrialTrace {
        rank: Vec::with_capacity(m),
        decoded_count: Vec::with_capacity(m),
        decode_time: vec![None; params.n],
        decode_time_delivered: vec![None; params.n],
        delivered: 0,
    };
    let mut ndec = 0usize;
    for t in 1..=m {
        let v = draw_coding_vector(params, rng);
        let erased = params.epsilon > 0.0 && rng.next_f64() < params.epsilon;
        if !erased {
            trace.delivered += 1;
            let rep = state.receive(&v).expect("vector length matches state");
            for i in rep.newly_decoded {
                trace.decode_time[i] = Some(t);
                trace.decode_time_delivered[i] = Some(trace.delivered);
                ndec += 1;
            }
        }
        trace.rank.push(state.rank());
        trace.decoded_count.push(ndec);
    }
    trace
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, q: u16, p: f64) -> SncParams {
        SncParams::new(n, FieldSpec::new(q).unwrap(), p, 0.0, CodingMode::FullyRandom).unwrap()
    }

    fn unit(n: usize, i: usize) -> CodingVector {
        let mut v = vec![FieldElement::ZERO; n];
        v[i] = FieldElement::ONE;
        CodingVector(v)
    }

    #[test]
    fn identity_rows_decode_one_by_one() {
        let p = params(5, 16, 0.5);
        let mut st = DecoderState::new(p.field.clone(), 5);
        for i in 0..5 {
            let rep = st.receive(&unit(5, i)).unwrap();
            assert!(rep.rank_increased);
            assert_eq!(rep.newly_decoded, vec![i]);
        }
        assert_eq!(st.rank(), 5);
        assert!(st.is_complete());
    }

    #[test]
    fn dependent_row_is_discarded() {
        // n=3, q=2: (1,1,0), (0,1,1), (1,0,1) — third is the sum of the first two
        let p = params(3, 2, 0.5);
        let mut st = DecoderState::new(p.field.clone(), 3);
        let rows = [[1u8, 1, 0], [0, 1, 1], [1, 0, 1]];
        let mut reports = Vec::new();
        for r in rows {
            let v = CodingVector(r.iter().map(|&x| FieldElement(x)).collect());
            reports.push(st.receive(&v).unwrap());
        }
        assert!(reports[0].rank_increased && reports[1].rank_increased);
        assert!(!reports[2].rank_increased);
        assert!(reports[2].newly_decoded.is_empty());
        assert_eq!(st.rank(), 2);
        assert_eq!(st.decoded_count(), 0);
    }

    #[test]
    fn partial_decode_via_back_substitution() {
        // n=3, q=2: (1,1,0) then (0,1,0): RREF is e_1, e_2
        let p = params(3, 2, 0.5);
        let mut st = DecoderState::new(p.field.clone(), 3);
        let v1 = CodingVector(vec![FieldElement(1), FieldElement(1), FieldElement(0)]);
        let v2 = CodingVector(vec![FieldElement(0), FieldElement(1), FieldElement(0)]);
        st.receive(&v1).unwrap();
        let rep = st.receive(&v2).unwrap();
        assert_eq!(rep.newly_decoded, vec![0, 1]);
        assert_eq!(st.rank(), 2);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = params(4, 2, 0.5);
        let mut st = DecoderState::new(p.field.clone(), 4);
        assert!(st.receive(&unit(3, 0)).is_err());
    }

    #[test]
    fn constrained_mode_draws_exact_weight() {
        let p = SncParams::new(32, FieldSpec::new(16).unwrap(), 2.0 / 32.0, 0.0, CodingMode::Constrained).unwrap();
        let mut rng = RandomStream::new(5);
        for _ in 0..200 {
            assert_eq!(draw_coding_vector(&p, &mut rng).weight(), 2);
        }
    }

    #[test]
    fn rlnc_density_draws_uniform_coefficients() {
        // p = 1 - 1/q makes every value equally likely
        let q = 16u16;
        let p = params(8, q, 1.0 - 1.0 / q as f64);
        let mut rng = RandomStream::new(17);
        let mut counts = vec![0usize; q as usize];
        for _ in 0..4000 {
            for c in draw_coding_vector(&p, &mut rng).0 {
                counts[c.0 as usize] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        let expect = total as f64 / q as f64;
        for (v, &c) in counts.iter().enumerate() {
            let dev = (c as f64 - expect).abs() / expect;
            assert!(dev < 0.1, "value {v} frequency off by {dev:.3}");
        }
    }

    #[test]
    fn fully_random_nonzero_frequency() {
        // n=8, q=2, p=0.25: empirical nonzero frequency within 3 SE of 0.25
        let p = params(8, 2, 0.25);
        let mut rng = RandomStream::new(23);
        let draws = 200_000usize;
        let mut nz = 0usize;
        for _ in 0..draws {
            nz += draw_coding_vector(&p, &mut rng).weight();
        }
        let freq = nz as f64 / (draws * 8) as f64;
        let se = (0.25f64 * 0.75 / (draws as f64 * 8.0)).sqrt();
        assert!((freq - 0.25).abs() < 3.0 * se + 1e-4, "freq {freq}");
    }

    #[test]
    fn full_erasure_keeps_rank_zero() {
        let mut pr = params(6, 2, 0.5);
        pr.epsilon = 1.0 - 1e-12;
        let mut rng = RandomStream::new(3);
        let tr = run_transmission(&pr, 20, &mut rng);
        assert!(tr.rank.iter().all(|&r| r == 0));
    }

    #[test]
    fn dense_rlnc_fills_rank() {
        // eps=0, m=n, q=256, p=1-1/q: full rank almost surely (dense law > 0.996)
        let pr = params(16, 256, 255.0 / 256.0);
        let mut full = 0;
        for k in 0..400 {
            let mut rng = RandomStream::for_trial(11, k);
            let tr = run_transmission(&pr, 16, &mut rng);
            if *tr.rank.last().unwrap() == 16 {
                full += 1;
            }
        }
        assert!(full >= 390, "full-rank rate {full}/400");
    }

    #[test]
    fn rank_and_decoded_are_monotone() {
        let pr = params(12, 16, 0.3);
        for k in 0..50 {
            let mut rng = RandomStream::for_trial(77, k);
            let tr = run_transmission(&pr, 30, &mut rng);
            for w in tr.rank.windows(2) {
                assert!(w[1] >= w[0]);
            }
            for w in tr.decoded_count.windows(2) {
                assert!(w[1] >= w[0]);
            }
            for (r, d) in tr.rank.iter().zip(&tr.decoded_count) {
                assert!(d <= r);
            }
        }
    }
}

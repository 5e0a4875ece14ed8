//! Deterministic, splittable random streams.
//!
//! Campaigns must be reproducible per trial and across worker counts, and the
//! stream derivation must be simple enough to re-implement bit-exactly in any
//! language. The generator is SplitMix64:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! output = z ^ (z >> 31)
//! ```
//!
//! Trial `k` of a campaign with seed `s` uses the stream seeded with
//! `mix(s ^ (k + 1) * 0x9E3779B97F4A7C15)` where `mix` is the finalizer above.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct RandomStream {
    state: u64,
}

impl RandomStream {
    pub fn new(seed: u64) -> RandomStream {
        RandomStream { state: seed }
    }

    /// Stream for trial `k` derived from a campaign base seed.
    pub fn for_trial(base_seed: u64, k: u64) -> RandomStream {
        RandomStream::new(mix(base_seed ^ (k.wrapping_add(1)).wrapping_mul(GOLDEN)))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform in [0, 1).
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, bound) by rejection; bound >= 1.
    #[inline]
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound >= 1);
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }

    /// Sample `k` distinct indices from [0, n) (partial Fisher-Yates).
    pub fn sample_indices(&mut self, n: usize, k: usize, scratch: &mut Vec<usize>) {
        scratch.clear();
        scratch.extend(0..n);
        for i in 0..k.min(n) {
            let j = i + self.next_below((n - i) as u64) as usize;
            scratch.swap(i, j);
        }
        scratch.truncate(k.min(n));
    }
}

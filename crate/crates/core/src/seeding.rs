//! Deterministic random number generation.
//!
//! Every generator in this crate is a xoshiro256** stream whose 256-bit state
//! is expanded from a 64-bit seed with splitmix64. The choice is fixed so that
//! trajectories are bit-identical across platforms and builds.

use std::time::{SystemTime, UNIX_EPOCH};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 generator, used for seed expansion and child-seed derivation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

impl Iterator for SplitMix64 {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        Some(SplitMix64::next_u64(self))
    }
}

/// xoshiro256** pseudo-random generator.
///
/// An `Rng` is single-owner state: it can be moved between threads but every
/// draw advances it, so sharing one for concurrent draws is not supported.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rng {
    s: [u64; 4],
}

impl Rng {
    /// Seeds the generator by taking the first four splitmix64 outputs of `seed`.
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = SplitMix64::new(seed);
        let s = [sm.next_u64(), sm.next_u64(), sm.next_u64(), sm.next_u64()];
        Self { s }
    }

    /// Seeds from the wall clock. Used only when the caller never supplied a seed.
    pub fn from_entropy() -> Self {
        Self::from_seed(entropy_seed())
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform real in `[0, 1)` built from the top 53 bits of one draw.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)` without modulo bias. `n` must be nonzero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below() requires a nonzero bound");
        // Lemire's multiply-shift with rejection.
        let mut m = (self.next_u64() as u128) * (n as u128);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = (self.next_u64() as u128) * (n as u128);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// Uniform integer in the inclusive range `[low, high]`.
    pub fn int_inclusive(&mut self, low: i64, high: i64) -> i64 {
        debug_assert!(low <= high);
        let span = (high as i128 - low as i128 + 1) as u128;
        if span > u64::MAX as u128 {
            return self.next_u64() as i64;
        }
        (low as i128 + self.below(span as u64) as i128) as i64
    }

    /// Uniform real in `[low, high)`.
    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.next_f64()
    }

    /// Standard normal draw via the Box-Muller transform (two uniforms per call).
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Standard exponential draw by inversion.
    pub fn standard_exponential(&mut self) -> f64 {
        -(1.0 - self.next_f64()).ln()
    }
}

/// Shorthand for [`Rng::from_seed`].
pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::from_seed(seed)
}

/// Child seeds for sub-environments: element `i` of the splitmix64 stream of `parent`.
pub fn derive_child_seeds(parent: u64, n: usize) -> Vec<u64> {
    SplitMix64::new(parent).take(n).collect()
}

/// A single derived seed, addressed by `(parent, child_index)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedSequence {
    pub parent_seed: u64,
    pub child_index: usize,
}

impl SeedSequence {
    pub fn new(parent_seed: u64, child_index: usize) -> Self {
        Self {
            parent_seed,
            child_index,
        }
    }

    pub fn seed(&self) -> u64 {
        let mut sm = SplitMix64::new(self.parent_seed);
        for _ in 0..self.child_index {
            sm.next_u64();
        }
        sm.next_u64()
    }

    pub fn rng(&self) -> Rng {
        Rng::from_seed(self.seed())
    }
}

/// Wall-clock derived seed for callers that never provided one.
pub fn entropy_seed() -> u64 {
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or_default();
    SplitMix64::new(nanos as u64 ^ (nanos >> 64) as u64 ^ std::process::id() as u64).next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen from an independent Python implementation of splitmix64/xoshiro256**.
    const XOSHIRO_0: [u64; 3] = [0x99ec5f36cb75f2b4, 0xbf6e1f784956452a, 0x1a5f849d4933e6e0];
    const XOSHIRO_1: [u64; 3] = [0xb3f2af6d0fc710c5, 0x853b559647364cea, 0x92f89756082a4514];
    const XOSHIRO_42: [u64; 3] = [0x15780b2e0c2ec716, 0x6104d9866d113a7e, 0xae17533239e499a1];
    const CHILDREN_42: [u64; 8] = [
        0xbdd732262feb6e95,
        0x28efe333b266f103,
        0x47526757130f9f52,
        0x581ce1ff0e4ae394,
        0x09bc585a244823f2,
        0xde4431fa3c80db06,
        0x37e9671c45376d5d,
        0xccf635ee9e9e2fa4,
    ];

    fn first3(seed: u64) -> [u64; 3] {
        let mut rng = Rng::from_seed(seed);
        [rng.next_u64(), rng.next_u64(), rng.next_u64()]
    }

    #[test]
    fn matches_reference_streams() {
        assert_eq!(first3(0), XOSHIRO_0);
        assert_eq!(first3(1), XOSHIRO_1);
        assert_eq!(first3(42), XOSHIRO_42);
        assert_ne!(first3(0)[0], first3(1)[0]);
    }

    #[test]
    fn equal_seeds_equal_streams() {
        let mut a = rng_from_seed(42);
        let mut b = rng_from_seed(42);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn next_f64_uses_top_53_bits() {
        let mut rng = rng_from_seed(42);
        assert_eq!(rng.next_f64(), 0.08386297105988216);
    }

    #[test]
    fn unit_interval_codomain() {
        let mut rng = rng_from_seed(3);
        for _ in 0..1_000_000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn child_seeds_match_reference() {
        assert_eq!(derive_child_seeds(42, 8), CHILDREN_42);
        assert_eq!(derive_child_seeds(7, 3), derive_child_seeds(7, 3));
        assert_eq!(derive_child_seeds(7, 1)[0], 0x63cbe1e459320dd7);
        let mut distinct = CHILDREN_42.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        assert_eq!(distinct.len(), 8);
    }

    #[test]
    fn seed_sequence_indexes_the_child_stream() {
        let children = derive_child_seeds(99, 5);
        for (i, &c) in children.iter().enumerate() {
            assert_eq!(SeedSequence::new(99, i).seed(), c);
        }
    }

    #[test]
    fn child_streams_share_no_64_draw_window() {
        let children = derive_child_seeds(42, 4);
        let streams: Vec<Vec<u64>> = children
            .iter()
            .map(|&s| {
                let mut rng = rng_from_seed(s);
                (0..10_000).map(|_| rng.next_u64()).collect()
            })
            .collect();
        for i in 0..streams.len() {
            let windows: std::collections::HashSet<&[u64]> = streams[i].windows(64).collect();
            for later in &streams[i + 1..] {
                assert!(later.windows(64).all(|w| !windows.contains(w)));
            }
        }
    }

    #[test]
    fn below_stays_in_range_and_covers_it() {
        let mut rng = rng_from_seed(11);
        let mut seen = [0usize; 7];
        for _ in 0..7000 {
            seen[rng.below(7) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800));
        for _ in 0..1000 {
            let v = rng.int_inclusive(-3, 3);
            assert!((-3..=3).contains(&v));
        }
    }
}

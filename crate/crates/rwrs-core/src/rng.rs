//! Counter-based splittable random number generator.
//!
//! Every Monte Carlo experiment in this crate derives one independent stream
//! per replicate from `(seed, experiment id, replicate index)`. A stream is a
//! key plus a counter; output word `n` is a bijective 64-bit hash of
//! `key + n * GOLDEN`, so replicate `r` produces the same values no matter
//! which worker thread runs it or in which order replicates are scheduled.

use rand_core::{impls, RngCore};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer: a bijective mixing of 64 bits.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A splittable counter-based generator.
///
/// `split(id)` derives a child stream whose output is statistically
/// independent of the parent's and of any sibling's; it never advances the
/// parent. Cloning preserves the counter position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamRng {
    key: u64,
    ctr: u64,
}

impl StreamRng {
    /// Root stream for an experiment seed.
    pub fn from_seed(seed: u64) -> Self {
        StreamRng {
            key: mix64(seed ^ GOLDEN),
            ctr: 0,
        }
    }

    /// Derive the child stream with the given id (experiment id, replicate
    /// index, ...). Children of distinct ids have distinct keys.
    pub fn split(&self, id: u64) -> Self {
        StreamRng {
            key: mix64(self.key ^ mix64(id.wrapping_mul(GOLDEN) ^ 0xd1b5_4a32_d192_ed03)),
            ctr: 0,
        }
    }

    /// Convenience: derive a stream from a seed and a path of ids.
    pub fn from_path(seed: u64, path: &[u64]) -> Self {
        let mut rng = Self::from_seed(seed);
        for &id in path {
            rng = rng.split(id);
        }
        rng
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.ctr = self.ctr.wrapping_add(1);
        mix64(self.key.wrapping_add(self.ctr.wrapping_mul(GOLDEN)))
    }

    /// Uniform double in [0, 1) with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw from `0..n`.
    #[inline]
    pub fn next_below(&mut self, n: u64) -> u64 {
        // Lemire-style rejection to remove modulo bias.
        debug_assert!(n > 0);
        loop {
            let x = self.next_u64();
            let (hi, lo) = {
                let wide = (x as u128) * (n as u128);
                ((wide >> 64) as u64, wide as u64)
            };
            if lo >= n || lo >= n.wrapping_neg() % n {
                return hi;
            }
        }
    }
}

impl RngCore for StreamRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (StreamRng::next_u64(self) >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        StreamRng::next_u64(self)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        impls::fill_bytes_via_next(self, dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand_core::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// A pool of random bits consumed one at a time; refills every 64 draws.
/// Used in the ±1 hot loops where one uniform per step would dominate.
pub struct BitPool<'a> {
    rng: &'a mut StreamRng,
    bits: u64,
    left: u32,
}

impl<'a> BitPool<'a> {
    pub fn new(rng: &'a mut StreamRng) -> Self {
        BitPool { rng, bits: 0, left: 0 }
    }

    #[inline]
    pub fn next_bit(&mut self) -> bool {
        if self.left == 0 {
            self.bits = self.rng.next_u64();
            self.left = 64;
        }
        let b = self.bits & 1 != 0;
        self.bits >>= 1;
        self.left -= 1;
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_stream() {
        let a: Vec<u64> = {
            let mut r = StreamRng::from_path(42, &[7, 3]);
            (0..8).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = StreamRng::from_path(42, &[7, 3]);
            (0..8).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn split_is_independent_of_parent_position() {
        let parent = StreamRng::from_seed(1);
        let mut advanced = parent.clone();
        for _ in 0..100 {
            advanced.next_u64();
        }
        assert_eq!(parent.split(5), advanced.split(5));
    }

    #[test]
    fn distinct_ids_distinct_streams() {
        let root = StreamRng::from_seed(9);
        let mut x = root.split(0);
        let mut y = root.split(1);
        let same = (0..64).filter(|_| x.next_u64() == y.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn uniform_f64_in_unit_interval() {
        let mut r = StreamRng::from_seed(3);
        for _ in 0..10_000 {
            let u = r.next_f64();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn next_below_bounds_and_coverage() {
        let mut r = StreamRng::from_seed(4);
        let mut seen = [false; 7];
        for _ in 0..10_000 {
            let v = r.next_below(7) as usize;
            assert!(v < 7);
            seen[v] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}

//! Seeded pseudo-random numbers with a fixed, documented algorithm.
//!
//! Partitions and forests must be reproducible by other implementations, so
//! the generator is spelled out here rather than borrowed from a crate whose
//! stream may change between releases.
//!
//! * State initialisation: one SplitMix64 step over the seed
//!   (increment `0x9E3779B97F4A7C15`, multipliers `0xBF58476D1CE4E5B9` and
//!   `0x94D049BB133111EB`, shifts 30/27/31). A zero result is replaced by the
//!   increment constant.
//! * Step: xorshift64* with shifts 12/25/27 and output multiplier
//!   `0x2545F4914F6CDD1D`.
//! * Bounded draws: rejection sampling. With `r = u64::MAX % n`, outputs
//!   `>= u64::MAX - r` are discarded and the rest reduced modulo `n`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 mixing step applied to `z`.
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// xorshift64* generator.
#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub fn new(seed: u64) -> Self {
        let state = match splitmix64(seed) {
            0 => GOLDEN,
            s => s,
        };
        XorShift64Star { state }
    }

    /// Independent stream for item `index` of a seeded family (e.g. one tree
    /// of a forest).
    pub fn stream(seed: u64, index: u64) -> Self {
        Self::new(splitmix64(seed) ^ splitmix64(index.wrapping_add(GOLDEN)))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty range");
        let n = n as u64;
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    /// Fisher-Yates shuffle, walking from the last element down.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

//! Bloom filter over 32-byte fingerprints.
//!
//! Fingerprints are already uniform hashes, so the `k` probe positions come
//! from double hashing over two 64-bit words of the fingerprint itself.

use alloc::vec;
use alloc::vec::Vec;

use crate::types::Digest;

pub const DEFAULT_BITS: u64 = 1 << 20;
pub const DEFAULT_HASHES: u32 = 7;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BloomFilter {
    words: Vec<u64>,
    m: u64,
    k: u32,
    inserted: u64,
}

impl Default for BloomFilter {
    fn default() -> Self {
        Self::new(DEFAULT_BITS, DEFAULT_HASHES)
    }
}

impl BloomFilter {
    /// `m` bits (rounded up to a multiple of 64) and `k` probes.
    pub fn new(m: u64, k: u32) -> Self {
        assert!(m > 0 && k > 0, "bloom filter needs bits and probes");
        let words = m.div_ceil(64);
        BloomFilter { words: vec![0; words as usize], m: words * 64, k, inserted: 0 }
    }

    pub fn bits(&self) -> u64 {
        self.m
    }

    pub fn hashes(&self) -> u32 {
        self.k
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    fn probes(&self, fp: &Digest) -> impl Iterator<Item = u64> + '_ {
        let b = fp.as_bytes();
        let h1 = u64::from_be_bytes(b[0..8].try_into().expect("8 bytes"));
        // Odd step so probes never collapse onto one position when m is a
        // power of two.
        let h2 = u64::from_be_bytes(b[8..16].try_into().expect("8 bytes")) | 1;
        (0..u64::from(self.k)).map(move |i| h1.wrapping_add(i.wrapping_mul(h2)) % self.m)
    }

    pub fn insert(&mut self, fp: &Digest) {
        let idx: Vec<u64> = self.probes(fp).collect();
        for i in idx {
            self.words[(i / 64) as usize] |= 1 << (i % 64);
        }
        self.inserted += 1;
    }

    pub fn contains(&self, fp: &Digest) -> bool {
        self.probes(fp).all(|i| self.words[(i / 64) as usize] & (1 << (i % 64)) != 0)
    }

    /// Expected false-positive rate at the current population.
    pub fn estimated_fpr(&self) -> f64 {
        let k = f64::from(self.k);
        let fill = 1.0 - exp_approx(-k * self.inserted as f64 / self.m as f64);
        powi(fill, self.k)
    }
}

// no_std has no f64::exp; a short series is plenty for a diagnostic.
fn exp_approx(x: f64) -> f64 {
    // exp(x) = exp(x / 2^n)^(2^n) keeps the series argument small.
    let n = 16;
    let y = x / f64::from(1u32 << n);
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..12 {
        term *= y / f64::from(i);
        sum += term;
    }
    (0..n).fold(sum, |acc, _| acc * acc)
}

fn powi(x: f64, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, _| acc * x)
}

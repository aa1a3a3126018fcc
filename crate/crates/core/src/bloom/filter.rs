use std::f64::consts::LN_2;

use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::error::{Error, Result};

/// Bit count `c` and hash count `k` of a classic Bloom filter holding
/// `capacity` keys at false-positive rate `fp_rate`:
/// `c = ⌈capacity·ln(1/ε)/ln²2⌉`, `k = max(1, round(c/capacity · ln 2))`.
pub fn bloom_params(capacity: usize, fp_rate: f64) -> Result<(usize, usize)> {
    if capacity == 0 {
        return Err(Error::Config("Bloom capacity must be at least 1".into()));
    }
    if !(fp_rate > 0.0 && fp_rate < 1.0) {
        return Err(Error::Config(format!("false-positive rate {fp_rate} outside (0, 1)")));
    }
    let cap = capacity as f64;
    let c = (cap * (1.0 / fp_rate).ln() / (LN_2 * LN_2)).ceil() as usize;
    let k = ((c as f64 / cap) * LN_2).round().max(1.0) as usize;
    Ok((c, k))
}

/// The `k` hash functions shared by every filter of an encoding:
/// double hashing `h_t(x) = (h₁(x) + t·h₂(x)) mod c` over two seeded xxh3 hashes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashScheme {
    pub c: usize,
    pub k: usize,
    pub seed: u64,
}

impl HashScheme {
    pub fn new(c: usize, k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("need at least one hash function".into()));
        }
        if c < k {
            return Err(Error::Config(format!(
                "{c} bits cannot hold {k} distinct hash positions"
            )));
        }
        Ok(HashScheme { c, k, seed })
    }

    /// The `k` bit positions of key `x` (possibly with repeats).
    pub fn positions(&self, x: u64) -> impl Iterator<Item = usize> + '_ {
        let bytes = x.to_le_bytes();
        let h1 = xxh3_64_with_seed(&bytes, self.seed);
        let h2 = xxh3_64_with_seed(&bytes, self.seed ^ 0xA076_1D64_78BD_642F);
        let c = self.c as u64;
        (0..self.k as u64).map(move |t| (h1.wrapping_add(t.wrapping_mul(h2)) % c) as usize)
    }
}

/// A `c`-bit array with `k` hash functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BloomFilter {
    scheme: HashScheme,
    words: Vec<u64>,
    insert_count: usize,
}

impl BloomFilter {
    pub fn new(scheme: HashScheme) -> Self {
        BloomFilter {
            scheme,
            words: vec![0; scheme.c.div_ceil(64)],
            insert_count: 0,
        }
    }

    pub fn scheme(&self) -> &HashScheme {
        &self.scheme
    }

    pub fn add(&mut self, x: u64) {
        let scheme = self.scheme;
        for p in scheme.positions(x) {
            self.words[p / 64] |= 1 << (p % 64);
        }
        self.insert_count += 1;
    }

    pub fn contains(&self, x: u64) -> bool {
        self.scheme.positions(x).all(|p| self.bit(p))
    }

    #[inline]
    pub fn bit(&self, p: usize) -> bool {
        self.words[p / 64] >> (p % 64) & 1 == 1
    }

    /// Number of `add` calls (unions do not count).
    pub fn insert_count(&self) -> usize {
        self.insert_count
    }

    /// Bitwise OR with `other`; both must share the same hash scheme.
    pub fn union_with(&mut self, other: &BloomFilter) -> Result<()> {
        if self.scheme != other.scheme {
            return Err(Error::Config("union of Bloom filters with different hash schemes".into()));
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        Ok(())
    }

    pub fn nnz(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Estimated set size `−(c/k)·ln(1 − nnz/c)`; `+∞` once every bit is set.
    pub fn size_estimate(&self) -> f64 {
        estimate(self.scheme.c, self.scheme.k, self.nnz())
    }

    /// Indices of set bits, ascending.
    pub fn set_bits(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.nnz());
        for (w, &word) in self.words.iter().enumerate() {
            let mut x = word;
            while x != 0 {
                let b = x.trailing_zeros() as usize;
                out.push((w * 64 + b) as u32);
                x &= x - 1;
            }
        }
        out
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }
}

pub(crate) fn estimate(c: usize, k: usize, nnz: usize) -> f64 {
    if nnz >= c {
        return f64::INFINITY;
    }
    let (c, k) = (c as f64, k as f64);
    -(c / k) * (1.0 - nnz as f64 / c).ln()
}

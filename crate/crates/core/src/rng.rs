//! Keyed random streams.
//!
//! Every random draw in the crate comes from a [`RngStream`]: a master seed
//! plus a tuple of integers naming what the stream is for (generator kind,
//! sweep cell, permutation index, ...). The key is hashed with SHA-256 into
//! the 256-bit key of a ChaCha20 generator, so a stream's output depends only
//! on `(master_seed, key)` and never on thread scheduling.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Recorded in every output manifest.
pub const RNG_ALGORITHM: &str = "chacha20/sha256-keyed-streams/v1";

const DOMAIN: &[u8] = b"gainloss-rng-stream-v1";

/// Stream purposes, used as the first key word.
pub mod purpose {
    pub const GAUSSIAN: u64 = 1;
    pub const STUDENT_T: u64 = 2;
    pub const DROP_REBOUND: u64 = 3;
    pub const SWEEP: u64 = 4;
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_key: Vec<u64>,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_key: impl Into<Vec<u64>>) -> Self {
        Self {
            master_seed,
            stream_key: stream_key.into(),
        }
    }

    /// A sub-stream with `word` appended to the key.
    pub fn child(&self, word: u64) -> Self {
        let mut key = self.stream_key.clone();
        key.push(word);
        Self {
            master_seed: self.master_seed,
            stream_key: key,
        }
    }

    pub fn seed_bytes(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(DOMAIN);
        h.update(self.master_seed.to_le_bytes());
        h.update((self.stream_key.len() as u64).to_le_bytes());
        for w in &self.stream_key {
            h.update(w.to_le_bytes());
        }
        h.finalize().into()
    }

    pub fn rng(&self) -> ChaCha20Rng {
        ChaCha20Rng::from_seed(self.seed_bytes())
    }
}

/// Unbiased integer in `[0, n)` by widening multiply with rejection.
pub fn uniform_below<R: RngCore + ?Sized>(rng: &mut R, n: u64) -> u64 {
    assert!(n > 0, "empty range");
    let threshold = n.wrapping_neg() % n;
    loop {
        let m = (rng.next_u64() as u128) * (n as u128);
        if (m as u64) >= threshold {
            return (m >> 64) as u64;
        }
    }
}

/// In-place Fisher-Yates shuffle driven by [`uniform_below`].
pub fn fisher_yates<T, R: RngCore + ?Sized>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = uniform_below(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_sequence() {
        let a = RngStream::new(7, vec![1, 2, 3]);
        let mut x = a.rng();
        let mut y = a.clone().rng();
        for _ in 0..100 {
            assert_eq!(x.next_u64(), y.next_u64());
        }
    }

    #[test]
    fn distinct_keys_differ() {
        let mut x = RngStream::new(7, vec![1, 2]).rng();
        let mut y = RngStream::new(7, vec![1, 2, 0]).rng();
        let mut z = RngStream::new(8, vec![1, 2]).rng();
        let (a, b, c) = (x.next_u64(), y.next_u64(), z.next_u64());
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn child_appends() {
        let s = RngStream::new(1, vec![4]).child(9);
        assert_eq!(s.stream_key, vec![4, 9]);
    }

    #[test]
    fn uniform_below_covers_range_evenly() {
        let mut rng = RngStream::new(3, vec![0]).rng();
        let mut counts = [0u32; 6];
        for _ in 0..60_000 {
            counts[uniform_below(&mut rng, 6) as usize] += 1;
        }
        for c in counts {
            assert!((9_500..10_500).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn fisher_yates_is_permutation() {
        let mut rng = RngStream::new(5, vec![]).rng();
        let mut v: Vec<u32> = (0..100).collect();
        fisher_yates(&mut v, &mut rng);
        let mut sorted = v.clone();
        sorted.sort();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}

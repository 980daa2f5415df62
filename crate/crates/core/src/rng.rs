//! Splittable seed streams.
//!
//! Every random draw in the crate comes from a [`SeedStream`]. A stream is a
//! ChaCha8 key; child streams are derived by mixing the parent key with a
//! label and an index, so replicate `i` of an experiment sees the same
//! numbers no matter which worker runs it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream {
    key: [u64; 4],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn label_hash(label: &str) -> u64 {
    // FNV-1a; labels are short ASCII tags.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        let mut s = seed;
        SeedStream {
            key: [
                splitmix64(&mut s),
                splitmix64(&mut s),
                splitmix64(&mut s),
                splitmix64(&mut s),
            ],
        }
    }

    /// Child stream for `(label, index)`. Distinct labels or indices give
    /// unrelated keys; the same pair always gives the same key.
    pub fn child(&self, label: &str, index: u64) -> Self {
        let mut s = self.key[0]
            ^ self.key[1].rotate_left(17)
            ^ self.key[2].rotate_left(31)
            ^ self.key[3].rotate_left(47);
        s ^= label_hash(label);
        let mut key = [0u64; 4];
        for (slot, word) in key.iter_mut().zip(self.key) {
            *slot = splitmix64(&mut s) ^ word;
        }
        let mut t = index ^ 0xA076_1D64_78BD_642F;
        for slot in key.iter_mut() {
            *slot ^= splitmix64(&mut t);
        }
        SeedStream { key }
    }

    pub fn replicate(&self, index: u64) -> Self {
        self.child("replicate", index)
    }

    pub fn rng(&self) -> StreamRng {
        let mut seed = [0u8; 32];
        for (chunk, word) in seed.chunks_exact_mut(8).zip(self.key) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_same_numbers() {
        let a: Vec<u64> = (0..8).map(|_| 0).scan(SeedStream::new(9).rng(), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..8).map(|_| 0).scan(SeedStream::new(9).rng(), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn children_are_distinct() {
        let root = SeedStream::new(1);
        assert_ne!(root.replicate(0), root.replicate(1));
        assert_ne!(root.child("a", 0), root.child("b", 0));
        assert_eq!(root.child("a", 3), root.child("a", 3));
        let x: u64 = root.replicate(0).rng().random();
        let y: u64 = root.replicate(1).rng().random();
        assert_ne!(x, y);
    }
}

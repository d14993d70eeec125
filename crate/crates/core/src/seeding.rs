//! Counter-based seed derivation.
//!
//! A [`SeedSchedule`] maps `(master_seed, tag, index)` to a ChaCha8 keystream:
//! the key is expanded from the master seed and the tag, and the index selects
//! the 64-bit ChaCha stream id. Stream `i` is therefore independent of how many
//! streams were consumed before it, and bit-identical across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSchedule {
    pub master_seed: u64,
}

impl SeedSchedule {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// Fix the experiment tag; the returned family hands out per-index streams.
    pub fn family(&self, tag: &str) -> StreamFamily {
        let mut state = self.master_seed ^ fnv1a(tag.as_bytes());
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        StreamFamily { key }
    }

    pub fn stream(&self, tag: &str, index: u64) -> ChaCha8Rng {
        self.family(tag).stream(index)
    }
}

/// All streams sharing one `(master_seed, tag)` key.
#[derive(Debug, Clone, Copy)]
pub struct StreamFamily {
    key: [u8; 32],
}

impl StreamFamily {
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        rng
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_are_reproducible() {
        let s = SeedSchedule::new(42);
        let a: Vec<u64> = (0..4).map(|_| s.stream("t", 7).next_u64()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn distinct_indices_and_tags_differ() {
        let s = SeedSchedule::new(42);
        let x = s.stream("t", 0).next_u64();
        assert_ne!(x, s.stream("t", 1).next_u64());
        assert_ne!(x, s.stream("u", 0).next_u64());
        assert_ne!(x, SeedSchedule::new(43).stream("t", 0).next_u64());
    }

    #[test]
    fn stream_independent_of_access_order() {
        let fam = SeedSchedule::new(9).family("x");
        let late = fam.stream(1000).next_u64();
        for i in 0..1000 {
            let _ = fam.stream(i).next_u64();
        }
        assert_eq!(late, fam.stream(1000).next_u64());
    }

    #[test]
    fn pinned_first_word() {
        // Platform-stability canary: changes here break reproducibility of every output.
        let v = SeedSchedule::new(1).stream("linklevel", 0).next_u64();
        assert_eq!(v, 1831961899232856763);
        assert_eq!(v, SeedSchedule::new(1).family("linklevel").stream(0).next_u64());
    }
}

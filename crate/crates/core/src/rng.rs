//! Counter-based random streams.
//!
//! Every consumer of randomness asks for a stream keyed by a [`Domain`] and a
//! short tuple of indices (round, client, peer, ...). Keys map to a ChaCha8
//! key/stream pair, so the draws for one client never depend on how many other
//! clients exist or in which order threads run. Per-task draws inside a stream
//! are addressed by word position: task `k` owns words
//! `[k * WORDS_PER_TASK, (k + 1) * WORDS_PER_TASK)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 32-bit words reserved for each task inside a [`TaskStream`]. Eight `f64`
/// draws fit; callers in this crate use at most three per task.
pub const WORDS_PER_TASK: u128 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Truth = 1,
    Persistence = 2,
    Effort = 3,
    Signal = 4,
    Attack = 5,
    AttackMask = 6,
    Partition = 7,
    Reward = 8,
    Pairs = 9,
    Noise = 10,
    Trial = 11,
    Shapley = 12,
    Magnitude = 13,
    Delta = 14,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Streams {
    root: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix_ids(ids: &[u64]) -> u64 {
    let mut state = 0x243F_6A88_85A3_08D3 ^ ids.len() as u64;
    let mut acc = splitmix64(&mut state);
    for &id in ids {
        state ^= id;
        acc = acc.rotate_left(23) ^ splitmix64(&mut state);
    }
    acc
}

impl Streams {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    /// Derives an independent generator for `(domain, ids)`.
    pub fn stream(&self, domain: Domain, ids: &[u64]) -> ChaCha8Rng {
        let mut state = self.root ^ (domain as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(mix_ids(ids));
        rng
    }

    pub fn task_stream(&self, domain: Domain, ids: &[u64]) -> TaskStream {
        TaskStream {
            rng: self.stream(domain, ids),
        }
    }

    /// A child root for nested experiments (e.g. one trial of many).
    pub fn child(&self, domain: Domain, ids: &[u64]) -> Streams {
        Streams::new(self.stream(domain, ids).random())
    }
}

/// A stream whose draws are addressed by task index.
#[derive(Clone, Debug)]
pub struct TaskStream {
    rng: ChaCha8Rng,
}

impl TaskStream {
    pub fn at(&mut self, task: usize) -> &mut ChaCha8Rng {
        self.rng.set_word_pos(task as u128 * WORDS_PER_TASK);
        &mut self.rng
    }
}

/// Samples an index from a probability vector using one uniform draw.
pub fn categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap above the cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Uniform index in `[0, n)` from a single `f64` draw.
pub fn uniform_index<R: Rng + ?Sized>(n: usize, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    ((u * n as f64) as usize).min(n - 1)
}

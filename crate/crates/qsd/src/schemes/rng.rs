//! Randomness with counter-based addressing.
//!
//! Every variate a run consumes is a pure function of
//! `(run seed, lane, step, slot)`: the lane and step select a ChaCha stream,
//! the slot selects a position inside its keystream. Draws therefore do not
//! depend on iteration order, and sweeping slots at a fixed (lane, step) is
//! served from the same cipher block.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent purposes draw from disjoint stream families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lane {
    /// Particle movement.
    Move = 0,
    /// Uniform particle selection.
    Pick = 1,
    /// First position of a newly added particle.
    Spawn = 2,
    /// Relocation target after an absorption.
    Relocate = 3,
    /// One-off initial-state draws.
    Init = 4,
}

/// Seed for replication `rep` of a run keyed by `master`; injective in
/// `rep` for a fixed master seed (splitmix-style mixing of distinct inputs).
pub fn derive_seed(master: u64, rep: u64) -> u64 {
    mix64(master ^ mix64(rep.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn mix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// A run's random source.
#[derive(Debug, Clone)]
pub struct RunRng {
    rng: ChaCha8Rng,
    cur_stream: u64,
    cur_pos: u128,
}

impl RunRng {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        rng.set_word_pos(0);
        Self {
            rng,
            cur_stream: 0,
            cur_pos: 0,
        }
    }

    fn raw(&mut self, lane: Lane, step: u64, slot: u64) -> u64 {
        let stream = ((lane as u64) << 56) | (step & 0x00FF_FFFF_FFFF_FFFF);
        let pos = (slot as u128) << 1;
        if stream != self.cur_stream || pos != self.cur_pos {
            self.rng.set_stream(stream);
            self.rng.set_word_pos(pos);
            self.cur_stream = stream;
        }
        self.cur_pos = pos + 2;
        self.rng.next_u64()
    }

    /// Uniform variate in `[0, 1)` addressed by `(lane, step, slot)`.
    #[inline]
    pub fn u01(&mut self, lane: Lane, step: u64, slot: u64) -> f64 {
        (self.raw(lane, step, slot) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n` addressed by `(lane, step, slot)`.
    #[inline]
    pub fn index(&mut self, lane: Lane, step: u64, slot: u64, n: u64) -> u64 {
        debug_assert!(n >= 1);
        let i = (self.u01(lane, step, slot) * n as f64) as u64;
        i.min(n - 1)
    }
}

/// Inverse-CDF sampling: the smallest index whose cumulative probability
/// exceeds `u`. Deterministic in `(row, u)`.
#[inline]
pub fn sample_row(row: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (j, &p) in row.iter().enumerate() {
        cum += p;
        if u < cum {
            return j;
        }
    }
    row.len() - 1
}

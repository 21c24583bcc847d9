//! Keyed index streams feeding permutation generation.
//!
//! A [`SeededStream`] is ChaCha20 keyed directly with 256 bits of seed
//! material. Bounded draws use threshold rejection so every residue is
//! equally likely; the draw algorithm is implemented here rather than
//! borrowed from a sampling library so the consumed words stay pinned.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// Source of uniformly distributed bounded indices.
pub trait IndexStream {
    /// Returns a value uniformly distributed in `0..bound`. `bound` must be nonzero.
    fn below(&mut self, bound: usize) -> usize;
}

impl<S: IndexStream + ?Sized> IndexStream for &mut S {
    fn below(&mut self, bound: usize) -> usize {
        (**self).below(bound)
    }
}

/// 256-bit seed material.
pub type Seed = [u8; 32];

/// Deterministic keyed stream; identical seeds give identical draws on every platform.
#[derive(Clone, Debug)]
pub struct SeededStream {
    rng: ChaCha20Rng,
}

impl SeededStream {
    pub fn new(seed: Seed) -> Self {
        Self {
            rng: ChaCha20Rng::from_seed(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

impl IndexStream for SeededStream {
    fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "bound must be nonzero");
        let bound = bound as u64;
        // 2^64 mod bound; values below it would bias the low residues.
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.rng.next_u64();
            if x >= threshold {
                return (x % bound) as usize;
            }
        }
    }
}

/// Replays a fixed sequence of draws. Used to pin generation to hand-worked examples.
#[derive(Clone, Debug)]
pub struct ScriptedStream {
    draws: std::vec::IntoIter<usize>,
}

impl ScriptedStream {
    pub fn new(draws: Vec<usize>) -> Self {
        Self {
            draws: draws.into_iter(),
        }
    }

    /// True once every scripted draw has been consumed.
    pub fn is_exhausted(&self) -> bool {
        self.draws.len() == 0
    }
}

impl IndexStream for ScriptedStream {
    fn below(&mut self, bound: usize) -> usize {
        let v = self.draws.next().expect("scripted stream exhausted");
        assert!(
            v < bound,
            "scripted draw {v} out of range for bound {bound}"
        );
        v
    }
}

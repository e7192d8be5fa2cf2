use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Stream identifiers. Each consumer of randomness draws from its own stream
/// so that adding draws in one place never shifts another.
pub mod streams {
    pub const INIT: u64 = 1;
    pub const PARTITION: u64 = 2;
    pub const DATA: u64 = 3;
    pub const WORLD: u64 = 4;
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Counter-based deterministic random stream (ChaCha8).
///
/// A stream is fully identified by `(seed, stream, position)`; output is
/// identical across platforms for the same triple.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::derive(seed, 0)
    }

    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    /// Stream for one `(purpose, step)` pair, e.g. the chunk partition of a given training step.
    pub fn for_step(seed: u64, purpose: u64, step: u64) -> Self {
        let key = seed ^ purpose.wrapping_mul(GOLDEN);
        Self::derive(key, step)
    }

    /// Reconstructs a stream at an exact position, for replay.
    pub fn at(seed: u64, stream: u64, position: u128) -> Self {
        let mut s = Self::derive(seed, stream);
        s.inner.set_word_pos(position);
        s
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Position in 32-bit words from the start of the stream.
    pub fn position(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        if lo == hi {
            return lo;
        }
        lo + (hi - lo) * self.uniform()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }

    /// A random permutation of `0..len`.
    pub fn permutation(&mut self, len: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..len).collect();
        self.shuffle(&mut p);
        p
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

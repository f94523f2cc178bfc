//! Seeded randomness with deterministic child streams.
//!
//! Every independent draw (one dataset, one permutation replicate, one
//! Monte-Carlo trial) gets its own ChaCha stream keyed by `(seed, stream)`,
//! so results do not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type Rng = ChaCha20Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    seed: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for child stream `index`.
    pub fn child(&self, index: u64) -> Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// A nested seed space, e.g. one per experiment repetition.
    pub fn derive(&self, index: u64) -> SeedStream {
        use rand::RngCore;
        SeedStream::new(self.child(index).next_u64())
    }
}

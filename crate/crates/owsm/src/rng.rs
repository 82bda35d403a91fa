//! Deterministic random streams.
//!
//! Every source of randomness in the simulator is a [`RandomStream`] derived
//! from `(master_seed, stream_id)`. The generator is counter-based (ChaCha8),
//! so a stream's draws depend only on that pair, never on which worker thread
//! executes it or in what order streams are consumed. Distinct stream ids
//! select distinct ChaCha streams and are statistically independent.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A deterministic, independently seeded random stream.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    /// Derives the stream identified by `stream_id` under `master_seed`.
    pub fn derive(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        Self { rng }
    }

    /// One standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Fills `out` with independent N(0, sigma^2) draws.
    pub fn fill_gaussian(&mut self, out: &mut [f64], sigma: f64) {
        for v in out.iter_mut() {
            *v = sigma * self.standard_normal();
        }
    }

    /// Fills `out` with uniform bits, 64 per underlying word.
    pub fn fill_bits(&mut self, out: &mut [u8]) {
        for chunk in out.chunks_mut(64) {
            let word = self.rng.next_u64();
            for (i, bit) in chunk.iter_mut().enumerate() {
                *bit = ((word >> i) & 1) as u8;
            }
        }
    }
}

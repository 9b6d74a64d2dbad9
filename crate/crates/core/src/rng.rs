//! Reproducible random streams.
//!
//! Every random draw in a simulation comes from a ChaCha8 stream keyed by
//! `(master seed, trial index, channel)`. The master seed and trial index are
//! mixed with SplitMix64 into the 256-bit ChaCha key; the channel selects the
//! ChaCha stream number. Node `l` uses channel `l`, the fusion-center
//! receiver noise uses [`NOISE_CHANNEL`]. Any trial can therefore be replayed
//! in isolation, and results do not depend on how trials are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Channel used for fusion-center receiver noise.
pub const NOISE_CHANNEL: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub trial: u64,
    pub channel: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl StreamKey {
    pub fn new(seed: u64, trial: u64, channel: u64) -> Self {
        Self {
            seed,
            trial,
            channel,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut state = self.seed ^ splitmix64(&mut self.trial.clone());
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.channel);
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_distinct_and_replayable() {
        let draw = |k: StreamKey| -> Vec<u64> {
            let mut r = k.rng();
            (0..4).map(|_| r.random()).collect()
        };
        let base = StreamKey::new(7, 0, 0);
        assert_eq!(draw(base), draw(base));
        assert_ne!(draw(base), draw(StreamKey::new(7, 1, 0)));
        assert_ne!(draw(base), draw(StreamKey::new(7, 0, 1)));
        assert_ne!(draw(base), draw(StreamKey::new(8, 0, 0)));
        assert_ne!(draw(base), draw(StreamKey::new(7, 0, NOISE_CHANNEL)));
    }

    const PINNED: u64 = 2_443_147_587_445_944_762;

    #[test]
    fn first_draw_is_pinned() {
        // guards against silent changes to the stream derivation
        let mut r = StreamKey::new(0, 0, 0).rng();
        let first: u64 = r.random();
        assert_eq!(first, PINNED);
    }
}

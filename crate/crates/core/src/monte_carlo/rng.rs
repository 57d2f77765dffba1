use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed of a reproducible family of random streams.
///
/// `(master_seed, stream_id)` fixes a ChaCha8 key; each trial, slot or user
/// then reads its own ChaCha stream selected by a 64-bit counter, so results
/// do not depend on how work is partitioned across threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        RngSpec { master_seed, stream_id }
    }

    /// A spec for an independent purpose derived from this one.
    pub fn child(&self, id: u64) -> RngSpec {
        RngSpec {
            master_seed: self.master_seed,
            stream_id: mix64(self.stream_id ^ mix64(id.wrapping_add(GOLDEN))),
        }
    }

    fn key(&self) -> [u8; 32] {
        let mut state = self.master_seed ^ mix64(self.stream_id.wrapping_mul(GOLDEN).wrapping_add(1));
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            state = state.wrapping_add(GOLDEN);
            chunk.copy_from_slice(&mix64(state).to_le_bytes());
        }
        key
    }

    /// Generator for sub-stream `counter`.
    pub fn stream(&self, counter: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(counter);
        rng
    }
}

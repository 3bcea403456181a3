//! Counter-based RNG streams keyed by (seed, path, source tag).
//!
//! Every path and noise source owns an independent ChaCha stream, so
//! idiosyncratic/common independence is structural and results do not depend
//! on worker scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Noise-source tags; the numeric value selects the sub-stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    Brownian = 0,
    CommonBrownian = 1,
    Jumps = 2,
    CommonJumps = 3,
    Regime = 4,
    GaussVolterra = 5,
    CommonGaussVolterra = 6,
    /// Per-path coefficient draws (eps_1i, b_1jss').
    CoeffDraw = 7,
    InitialState = 8,
}

const TAGS_PER_PATH: u64 = 16;

#[derive(Debug, Clone)]
pub struct RngFactory {
    key: [u8; 32],
}

impl RngFactory {
    pub fn new(seed: u64) -> Self {
        // splitmix64 expansion of the user seed into a ChaCha key
        let mut key = [0u8; 32];
        let mut z = seed;
        for chunk in key.chunks_mut(8) {
            z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut x = z;
            x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            x ^= x >> 31;
            chunk.copy_from_slice(&x.to_le_bytes());
        }
        Self { key }
    }

    /// Independent stream for (path, tag).
    pub fn stream(&self, path: u64, tag: StreamTag) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::from_seed(self.key);
        rng.set_stream(path.wrapping_mul(TAGS_PER_PATH) + tag as u64);
        rng
    }
}

//! Reproducible random substreams.
//!
//! A stream is a ChaCha8 generator keyed by `(seed, stream_id)`. Substreams are
//! derived by hashing a key into the stream id, so work that is split across
//! threads draws from fixed streams and the output does not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Stream ids used by the top-level drivers.
pub mod streams {
    pub const CHANNEL: u64 = 1;
    pub const SOLVER: u64 = 2;
    pub const EAVESDROPPER: u64 = 3;
    pub const INIT: u64 = 4;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    pub fn substream(&self, key: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(key.wrapping_add(0x632b_e59b_d9b4_e019))),
        }
    }

    pub fn substream2(&self, a: u64, b: u64) -> Self {
        self.substream(a).substream(b)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

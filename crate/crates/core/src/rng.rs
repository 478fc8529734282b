//! Reproducible random streams.
//!
//! Each `(seed, stream_id)` pair names an independent ChaCha8 keystream, so
//! work split across threads draws the same numbers no matter which thread
//! runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Stream for chunk `chunk` of task `task`; both indices must fit in 32 bits.
    pub fn for_task(seed: u64, task: u32, chunk: u32) -> Self {
        Self::new(seed, (u64::from(task) << 32) | u64::from(chunk))
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

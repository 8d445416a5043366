//! Counter-based random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream selected by
//! `(seed, replica, purpose)`. The key is expanded from the master seed and the
//! 64-bit ChaCha stream id is `replica << 8 | purpose`, so two different
//! `(replica, purpose)` pairs can never share a stream. Results therefore do
//! not depend on the order in which replicas are scheduled.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Largest replica index that fits in the stream id layout.
pub const MAX_REPLICA: u64 = (1 << 56) - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Purpose {
    Walk = 1,
    Marks = 2,
    Env = 3,
    Limit = 4,
    Aux = 5,
}

impl Purpose {
    pub const ALL: [Purpose; 5] = [
        Purpose::Walk,
        Purpose::Marks,
        Purpose::Env,
        Purpose::Limit,
        Purpose::Aux,
    ];
}

/// Tag 0 is reserved for deriving child seeds.
const CHILD_TAG: u64 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Streams { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(replica: u64, purpose: Purpose) -> u64 {
        assert!(replica <= MAX_REPLICA, "replica index {replica} out of range");
        (replica << 8) | purpose as u64
    }

    pub fn stream(&self, replica: u64, purpose: Purpose) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(Self::stream_id(replica, purpose));
        rng
    }

    /// Independent family of streams for a sub-experiment, identified by `label`.
    pub fn child(&self, label: u64) -> Streams {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((label << 8) | CHILD_TAG);
        Streams {
            seed: rng.next_u64(),
        }
    }

    /// A single 64-bit value from the stream, e.g. an environment seed.
    pub fn word(&self, replica: u64, purpose: Purpose) -> u64 {
        self.stream(replica, purpose).next_u64()
    }
}

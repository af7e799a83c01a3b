//! Seed derivation for independent, reproducible random streams.
//!
//! Every random quantity in a simulation is drawn from a ChaCha stream keyed
//! by `(master seed, labels...)`. Two calls with the same key always see the
//! same numbers, no matter which thread runs them or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A position in the tree of random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        StreamKey(splitmix64(seed))
    }

    /// Derive a child key. Distinct labels give unrelated streams.
    pub fn child(self, label: u64) -> Self {
        StreamKey(splitmix64(self.0 ^ splitmix64(label.wrapping_add(0xA076_1D64_78BD_642F))))
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn rng(self) -> SimRng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// Labels for the independent purposes a stream can serve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    DevelopmentPool = 1,
    ValidationPool = 2,
    Intercept = 3,
    Sample = 4,
    CvFolds = 5,
    Bootstrap = 6,
}

impl From<Purpose> for u64 {
    fn from(p: Purpose) -> u64 {
        p as u64
    }
}

//! Counter-based seeding.
//!
//! Every random stream is a ChaCha8 generator keyed by the master seed and
//! addressed by a 64-bit stream id built from (index, purpose). Work unit `r`
//! therefore draws the same numbers no matter which worker runs it or in what
//! order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// What a stream is used for inside one work unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Geometry = 1,
    Noise = 2,
    Resample = 3,
    Oracle = 4,
    Spins = 5,
    Synthetic = 6,
}

/// Generator for a plain seed, used by the standalone samplers.
pub fn from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for work unit `index` and `purpose` under `master`.
pub fn stream(master: u64, index: u64, purpose: Purpose) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream((index << 8) | purpose as u64);
    rng
}

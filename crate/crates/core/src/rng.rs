//! Seeded random streams.
//!
//! Every random quantity is drawn from a ChaCha8 generator keyed by
//! `(seed, purpose)` and positioned on stream `index`. Keys come from
//! `seed_from_u64(seed ^ purpose tag)`; the stream id is the trial (or
//! class/trial pair) index. Work that fans out across threads therefore
//! produces the same numbers whatever the scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a derived stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Dataset,
    Chain,
    Calibration,
    Trial,
    MacroTrial,
    Sampling,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Dataset => 0x9e37_79b9_7f4a_7c15,
            Purpose::Chain => 0xbf58_476d_1ce4_e5b9,
            Purpose::Calibration => 0x94d0_49bb_1331_11eb,
            Purpose::Trial => 0xd6e8_feb8_6659_fd93,
            Purpose::MacroTrial => 0xa076_1d64_78bd_642f,
            Purpose::Sampling => 0xe703_7ed1_a0b4_28db,
        }
    }
}

/// A generator for `(seed, purpose)` on stream `index`.
pub fn derive(seed: u64, purpose: Purpose, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.tag());
    rng.set_stream(index);
    rng
}

/// Plain seeded generator (stream 0, no purpose tag).
pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Packs a (class, trial) pair into one stream id.
pub fn pair_index(class: usize, trial: usize) -> u64 {
    ((class as u64) << 32) | trial as u64
}

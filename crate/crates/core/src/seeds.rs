//! Per-voxel random streams.
//!
//! Every random draw in a coverage run comes from a ChaCha stream keyed by the
//! master seed and a stream id built from the voxel index and its purpose, so
//! results do not depend on evaluation order or thread count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coverage::Scheme;

const PURPOSES: u64 = 16;
const SHARED_FADING: u64 = 0;
const SCHEME_FADING: u64 = 1;
const SEARCH: u64 = 8;

pub fn stream(master: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(id);
    rng
}

/// Stream for the channel realization of voxel `t`. With `shared` fading all
/// schemes see the same realization.
pub fn fading(master: u64, t: usize, scheme: Scheme, shared: bool) -> ChaCha8Rng {
    let purpose = if shared {
        SHARED_FADING
    } else {
        SCHEME_FADING + scheme.index() as u64
    };
    stream(master, t as u64 * PURPOSES + purpose)
}

/// Seed for the placement search of `scheme` at voxel `t`.
pub fn search(master: u64, t: usize, scheme: Scheme) -> u64 {
    stream(master, t as u64 * PURPOSES + SEARCH + scheme.index() as u64).next_u64()
}

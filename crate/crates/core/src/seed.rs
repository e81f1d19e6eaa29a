//! Deterministic RNG substreams.
//!
//! Every random quantity in a mission draws from its own ChaCha stream keyed
//! by `(master seed, stream kind, index)`, so adding robots or reordering
//! computations never perturbs unrelated draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    StartPose = 1,
    Failure = 2,
    Prediction = 3,
    Sweep = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a stream tag and an index into a child seed.
pub fn derive(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream as u64)) ^ index)
}

pub fn substream(master: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, stream, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ() {
        assert_ne!(derive(1, Stream::Failure, 0), derive(1, Stream::Failure, 1));
        assert_ne!(derive(1, Stream::Failure, 0), derive(1, Stream::Prediction, 0));
        assert_eq!(derive(9, Stream::Sweep, 3), derive(9, Stream::Sweep, 3));
    }
}

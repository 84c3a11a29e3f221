//! Seeded random streams.
//!
//! Every stochastic step draws from a stream addressed by
//! `(master seed, purpose, index)`. A stream is a ChaCha8 generator keyed by the
//! master seed whose 64-bit stream id is mixed from the purpose tag and index.
//! ChaCha is counter-based, so distinct streams never overlap and a given
//! address yields the same bits regardless of platform or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. The tag string is part of the stream address and
/// must never change once results have been published with it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    FoldShuffle,
    FoldSeed,
    Bootstrap,
    FeatureSubset,
    WeightInit,
    EpochShuffle,
    Validation,
    Weather,
    Behavior,
}

impl Purpose {
    pub fn tag(self) -> &'static str {
        match self {
            Purpose::FoldShuffle => "folds",
            Purpose::FoldSeed => "fold-seed",
            Purpose::Bootstrap => "bootstrap",
            Purpose::FeatureSubset => "features",
            Purpose::WeightInit => "weight-init",
            Purpose::EpochShuffle => "epoch-shuffle",
            Purpose::Validation => "validation",
            Purpose::Weather => "weather",
            Purpose::Behavior => "behavior",
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream_id(purpose: Purpose, index: u64) -> u64 {
    splitmix64(fnv1a(purpose.tag().as_bytes()) ^ splitmix64(index))
}

/// Independent generator for `(master, purpose, index)`.
pub fn stream(master: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream_id(purpose, index));
    rng
}

/// A derived master seed, for handing a sub-computation (one CV fold, one
/// sweep cell) its own seed space.
pub fn derive_seed(master: u64, purpose: Purpose, index: u64) -> u64 {
    use rand::RngCore;
    stream(master, purpose, index).next_u64()
}

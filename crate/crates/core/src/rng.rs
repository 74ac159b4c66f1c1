//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by a
//! base seed and selected by a stream id, so the numbers a trial sees do
//! not depend on which thread runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domains. Keeping them distinct stops two consumers of the same
/// seed from reading correlated numbers.
pub mod domain {
    pub const SAMPLE_ROW: u64 = 1;
    pub const PROCESS: u64 = 2;
    pub const CONFIG_MODEL: u64 = 3;
    pub const CENSUS: u64 = 4;
    pub const TRIAL: u64 = 5;
    pub const BASIS: u64 = 6;
    pub const ANTICONC: u64 = 7;
    pub const WALK_MC: u64 = 8;
    pub const PERMUTE: u64 = 9;
    pub const PILOT: u64 = 10;
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes a seed with a list of labels into a new seed.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix(seed), |acc, &l| splitmix(acc ^ splitmix(l)))
}

/// Stream `(domain, index)` under key `seed`.
pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(derive_seed(domain, &[index]));
    rng
}

/// Seed for trial `trial` of an experiment keyed by `seed`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    derive_seed(seed, &[domain::TRIAL, trial])
}

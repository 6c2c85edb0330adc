//! Labelled sub-seed derivation.
//!
//! Every random stream (learner, Monte Carlo, table rows, shards) gets its own
//! seed hashed from the master seed and a label, so adding a consumer never
//! shifts the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The generator used for every random draw in the crate.
pub type SeedRng = ChaCha8Rng;

/// `SHA-256(master_le || label)` truncated to 64 bits.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng_from_seed(seed: u64) -> SeedRng {
    SeedRng::seed_from_u64(seed)
}

//! Seed derivation.
//!
//! Every random stream descends from one root seed. Component seeds are the
//! root XORed with a hash of a label, so adding a new labelled component never
//! shifts the streams of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

pub fn label_hash(label: &str) -> u64 {
    let digest = Sha256::digest(label.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn derive(root: u64, label: &str) -> u64 {
    root ^ label_hash(label)
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

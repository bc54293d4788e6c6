//! Counter-based seed derivation.
//!
//! Every random stream in the crate descends from one 64-bit master seed:
//!
//! ```text
//! stream_seed = SHA-256("ibcs/seed/v1" || master (u64 BE) || len(label) (u32 BE) || label || index (u64 BE))
//! ```
//!
//! The 32-byte result seeds a ChaCha20 generator. Distinct `(label, index)`
//! pairs give independent streams, so trials can run in any order or in
//! parallel and still reproduce bit-identically.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest as _, Sha256};

const SEED_DOMAIN: &[u8] = b"ibcs/seed/v1";

pub fn derive_seed(master: u64, label: &str, index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(SEED_DOMAIN);
    h.update(master.to_be_bytes());
    h.update((label.len() as u32).to_be_bytes());
    h.update(label.as_bytes());
    h.update(index.to_be_bytes());
    h.finalize().into()
}

pub fn stream(master: u64, label: &str, index: u64) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(derive_seed(master, label, index))
}

/// Folds a 32-byte seed into a new master value, for nesting derivations.
pub fn fold(seed: &[u8; 32]) -> u64 {
    u64::from_be_bytes(seed[..8].try_into().expect("8 bytes"))
}

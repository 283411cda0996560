//! Stable seed derivation, independent of evaluation order and platform.

use sha2::{Digest, Sha256};

/// Hashes a base seed together with labelled parts into a new 64-bit seed.
pub fn derive_seed(base: u64, parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    for p in parts {
        // length prefix keeps ("ab","c") distinct from ("a","bc")
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 digest is 32 bytes"))
}

use sha2::{Digest, Sha256};

/// Derives an independent, platform-stable RNG seed for a named stream.
pub fn derive_seed(base: u64, stream: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(stream.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

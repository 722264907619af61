use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives an independent 64-bit seed from a base seed, a purpose tag and
/// any number of integer coordinates (example index, epoch, ...).
pub fn derive(base: u64, tag: &str, parts: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag.as_bytes());
    for p in parts {
        h.update(p.to_le_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest length"))
}

pub fn rng(base: u64, tag: &str, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, tag, parts))
}

/// Stable 64-bit key for a string identifier.
pub fn key(s: &str) -> u64 {
    derive(0, s, &[])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_inputs_give_distinct_seeds() {
        assert_eq!(derive(1, "a", &[2]), derive(1, "a", &[2]));
        assert_ne!(derive(1, "a", &[2]), derive(1, "a", &[3]));
        assert_ne!(derive(1, "a", &[2]), derive(1, "b", &[2]));
        assert_ne!(derive(1, "ab", &[]), derive(1, "a", &[u64::from(b'b')]));
    }
}

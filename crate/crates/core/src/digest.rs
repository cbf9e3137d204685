use sha2::{Digest as _, Sha256};

use crate::types::Digest;

/// One-byte domain separator prepended to every index digest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum DomainTag {
    LeafEntry = 0x00,
    InternalNode = 0x01,
    HashBucket = 0x02,
    TrieNode = 0x03,
    RootAnchor = 0x04,
}

/// SHA-256 of `tag ‖ payload`.
pub fn digest(tag: DomainTag, payload: &[u8]) -> Digest {
    let mut h = Sha256::new();
    h.update([tag as u8]);
    h.update(payload);
    Digest(h.finalize().into())
}

/// Plain SHA-256, used for content addressing and cache fingerprints.
pub fn sha256(bytes: &[u8]) -> Digest {
    Digest(Sha256::digest(bytes).into())
}

/// Number of SHA-256 compression calls needed for a tagged payload of this
/// length. Used as the compute-unit charge of one digest.
pub fn compression_blocks(payload_len: usize) -> u64 {
    // tag byte + payload + 0x80 + 8-byte length, rounded up to 64.
    ((1 + payload_len + 9).div_ceil(64)) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn empty_leaf_digest_is_sha_of_tag() {
        assert_eq!(digest(DomainTag::LeafEntry, &[]), sha256(&[0x00]));
    }

    #[test]
    fn known_sha256_vector() {
        assert_eq!(
            alloc::format!("{}", sha256(b"abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn domain_tags_separate() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let len = rng.random_range(0..200);
            let p: Vec<u8> = (0..len).map(|_| rng.random()).collect();
            assert_ne!(digest(DomainTag::LeafEntry, &p), digest(DomainTag::InternalNode, &p));
        }
    }

    #[test]
    fn block_count() {
        assert_eq!(compression_blocks(0), 1);
        assert_eq!(compression_blocks(54), 1);
        assert_eq!(compression_blocks(55), 2);
    }
}

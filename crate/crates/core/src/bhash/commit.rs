//! Digest compositions shared by the tree and the range verifier.

use crate::codec::{encode_id_list, Encoder};
use crate::digest::{compression_blocks, digest, DomainTag};
use crate::gas::GasMeter;
use crate::types::{Digest, EntryId, TimeKey};

use super::KeyRange;

/// Marker that starts a radix-node payload under the hash-bucket tag.
pub(crate) const RADIX_MARKER: u8 = 0x20;

fn hash(meter: Option<&GasMeter>, tag: DomainTag, e: &Encoder) -> Digest {
    if let Some(m) = meter {
        m.compute(compression_blocks(e.as_bytes().len()));
    }
    digest(tag, e.as_bytes())
}

/// Pre-conversion leaf: `H(00 ‖ [(key, entry_id)])` over sorted pairs.
pub(crate) fn leaf_digest<'a>(
    meter: Option<&GasMeter>,
    pairs: impl ExactSizeIterator<Item = (&'a TimeKey, &'a EntryId)>,
) -> Digest {
    let mut e = Encoder::new();
    e.list_header(pairs.len());
    for (k, id) in pairs {
        e.item(k).u64(*id);
    }
    hash(meter, DomainTag::LeafEntry, &e)
}

/// Per-key bucket: `H(02 ‖ key ‖ [entry_id])` over sorted ids.
pub(crate) fn bucket_digest(meter: Option<&GasMeter>, key: TimeKey, ids: &[EntryId]) -> Digest {
    let mut e = Encoder::new();
    e.item(&key);
    encode_id_list(&mut e, ids);
    hash(meter, DomainTag::HashBucket, &e)
}

/// Compressed fingerprint of the sorted entry ids a leaf held when it was
/// converted.
pub(crate) fn fingerprint(meter: Option<&GasMeter>, sorted_ids: &[EntryId]) -> Digest {
    let mut e = Encoder::new();
    encode_id_list(&mut e, sorted_ids);
    hash(meter, DomainTag::HashBucket, &e)
}

/// Internal node: `H(01 ‖ lo ‖ hi ‖ [(child_lo, child_digest)])`.
pub(crate) fn internal_digest<'a>(
    meter: Option<&GasMeter>,
    range: KeyRange,
    children: impl ExactSizeIterator<Item = (TimeKey, &'a Digest)>,
) -> Digest {
    let mut e = Encoder::new();
    e.item(&range.lo).item(&range.hi);
    e.list_header(children.len());
    for (lo, d) in children {
        e.item(&lo).item(d);
    }
    hash(meter, DomainTag::InternalNode, &e)
}

/// Hash node: `H(01 ‖ fingerprint ‖ lo ‖ hi ‖ bucket_root)`.
///
/// Starts with a digest item, so it cannot collide with an internal-node
/// payload (which starts with a time key).
pub(crate) fn hash_node_digest(
    meter: Option<&GasMeter>,
    fingerprint: &Digest,
    range: KeyRange,
    bucket_root: &Digest,
) -> Digest {
    let mut e = Encoder::new();
    e.item(fingerprint).item(&range.lo).item(&range.hi).item(bucket_root);
    hash(meter, DomainTag::InternalNode, &e)
}

/// Radix node over bucket digests: `H(02 ‖ 20 ‖ bitmap ‖ present children)`.
pub(crate) fn radix_digest<'a>(
    meter: Option<&GasMeter>,
    children: impl Iterator<Item = Option<&'a Digest>>,
) -> Digest {
    let mut e = Encoder::new();
    let mut bitmap = 0u8;
    let mut present = [None; super::radix::FANOUT];
    for (i, c) in children.enumerate() {
        if let Some(d) = c {
            bitmap |= 1 << i;
            present[i] = Some(d);
        }
    }
    e.u8(RADIX_MARKER).u8(bitmap);
    for d in present.into_iter().flatten() {
        e.item(d);
    }
    hash(meter, DomainTag::HashBucket, &e)
}

/// Tree anchor: `H(04 ‖ mode ‖ root_node_digest)`. Binding the mode makes a
/// VO's pre/post-conversion flag tamper-evident.
pub(crate) fn root_anchor(meter: Option<&GasMeter>, converted: bool, root_node: &Digest) -> Digest {
    let mut e = Encoder::new();
    e.u8(u8::from(converted)).item(root_node);
    hash(meter, DomainTag::RootAnchor, &e)
}

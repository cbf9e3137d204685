//! Fixed-depth radix commitment over the bucket digests of a hash node.
//!
//! The key space is split `BITS` bits at a time, so every bucket sits at the
//! same depth and updating one bucket rewrites exactly [`LEVELS`] node
//! digests no matter how many buckets the node holds. Range proofs open the
//! nodes overlapping the queried interval and prune the rest.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::gas::GasMeter;
use crate::types::{Digest, EntryId, TimeKey};

use super::commit;
use super::proof::{RadixNodeProof, SlotProof};

pub const BITS: u32 = 2;
pub const FANOUT: usize = 1 << BITS;
/// Radix levels above the buckets.
pub const LEVELS: u32 = 64 / BITS;

/// Prefix identifying the level-`level` node that covers `key`.
pub(crate) fn prefix_of(key: u64, level: u32) -> u64 {
    if level == 0 {
        0
    } else {
        key >> (64 - BITS * level)
    }
}

/// Inclusive key interval covered by node `(level, prefix)`.
pub(crate) fn span(level: u32, prefix: u64) -> (u64, u64) {
    if level == 0 {
        return (0, u64::MAX);
    }
    let shift = 64 - BITS * level;
    let lo = prefix << shift;
    let width = if shift == 64 { u64::MAX } else { (1u64 << shift) - 1 };
    (lo, lo | width)
}

pub(crate) fn empty_root() -> Digest {
    commit::radix_digest(None, core::iter::repeat_n(None, FANOUT))
}

#[derive(Clone, Debug, Default)]
pub struct BucketRadix {
    /// Inner node digests keyed by `(level, prefix)`, levels `0..LEVELS`.
    nodes: BTreeMap<(u32, u64), Digest>,
    /// Bucket digests: the level-`LEVELS` entries.
    leaves: BTreeMap<TimeKey, Digest>,
}

impl BucketRadix {
    fn child(&self, level: u32, prefix: u64) -> Option<&Digest> {
        if level == LEVELS {
            self.leaves.get(&TimeKey(prefix))
        } else {
            self.nodes.get(&(level, prefix))
        }
    }

    fn node_digest(&self, meter: Option<&GasMeter>, level: u32, prefix: u64) -> Digest {
        let children = (0..FANOUT as u64).map(|c| self.child(level + 1, (prefix << BITS) | c));
        if let Some(m) = meter {
            m.read(FANOUT as u64);
        }
        commit::radix_digest(meter, children)
    }

    /// Builds the commitment bottom-up, writing every node once.
    pub fn build(meter: &GasMeter, leaves: BTreeMap<TimeKey, Digest>) -> Self {
        let mut radix = BucketRadix { nodes: BTreeMap::new(), leaves };
        let mut level_prefixes: Vec<u64> = radix.leaves.keys().map(|k| k.0).collect();
        for level in (0..LEVELS).rev() {
            let mut parents: Vec<u64> = level_prefixes.iter().map(|p| p >> BITS).collect();
            if level == 0 {
                parents.iter_mut().for_each(|p| *p = 0);
            }
            parents.dedup();
            for &p in &parents {
                let d = radix.node_digest(Some(meter), level, p);
                radix.nodes.insert((level, p), d);
                meter.write(1);
            }
            level_prefixes = parents;
        }
        radix
    }

    /// Sets one bucket digest and rewrites its root path.
    pub fn set_bucket(&mut self, meter: &GasMeter, key: TimeKey, bucket: Digest) {
        self.leaves.insert(key, bucket);
        meter.write(1);
        for level in (0..LEVELS).rev() {
            let p = prefix_of(key.0, level);
            let d = self.node_digest(Some(meter), level, p);
            self.nodes.insert((level, p), d);
            meter.write(1);
        }
    }

    pub fn root(&self) -> Digest {
        self.nodes.get(&(0, 0)).copied().unwrap_or_else(empty_root)
    }

    pub fn bucket_digests(&self) -> &BTreeMap<TimeKey, Digest> {
        &self.leaves
    }

    pub(crate) fn inner_nodes(&self) -> &BTreeMap<(u32, u64), Digest> {
        &self.nodes
    }

    /// Opens every node whose span meets `[s, e]`, appending the in-range
    /// bucket contents to `out` in key order.
    pub(crate) fn prove(
        &self,
        meter: &GasMeter,
        buckets: &BTreeMap<TimeKey, Vec<EntryId>>,
        s: u64,
        e: u64,
        out: &mut Vec<(TimeKey, EntryId)>,
    ) -> RadixNodeProof {
        self.prove_node(meter, buckets, 0, 0, s, e, out)
    }

    #[allow(clippy::too_many_arguments)]
    fn prove_node(
        &self,
        meter: &GasMeter,
        buckets: &BTreeMap<TimeKey, Vec<EntryId>>,
        level: u32,
        prefix: u64,
        s: u64,
        e: u64,
        out: &mut Vec<(TimeKey, EntryId)>,
    ) -> RadixNodeProof {
        meter.read(1);
        let mut slots: [SlotProof; FANOUT] = Default::default();
        for (c, slot) in slots.iter_mut().enumerate() {
            let cp = (prefix << BITS) | c as u64;
            let cl = level + 1;
            let Some(d) = self.child(cl, cp) else { continue };
            let (lo, hi) = span(cl, cp);
            *slot = if hi < s || lo > e {
                meter.read(1);
                SlotProof::Pruned(*d)
            } else if cl == LEVELS {
                let ids = buckets[&TimeKey(cp)].clone();
                meter.read(ids.len() as u64);
                out.extend(ids.iter().map(|id| (TimeKey(cp), *id)));
                SlotProof::Bucket(ids)
            } else {
                SlotProof::Opened(Box::new(self.prove_node(meter, buckets, cl, cp, s, e, out)))
            };
        }
        RadixNodeProof { slots }
    }
}

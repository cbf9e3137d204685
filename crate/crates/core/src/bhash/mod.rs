//! The BHashTree time-range index.
//!
//! Until the tree holds `threshold` entries it is an ordinary B+Tree over
//! [`TimeKey`]s whose leaves store `(key, entry_id)` pairs. The insert that
//! finds the population at the threshold first converts every leaf into a
//! hash node: entries move into per-key buckets, the per-key digests the
//! leaf already maintained become the bucket digests, and the leaf's sorted
//! id list is compressed into a fingerprint. After conversion the shape is
//! frozen. An insert descends the fixed-depth tree and touches one bucket,
//! so its storage writes no longer depend on the population.
//!
//! Every node commits to its key range through its parent, which is what
//! lets a [`RangeVo`] prove that pruned subtrees hold nothing in range.

mod commit;
pub mod proof;
pub mod radix;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;

use thiserror::Error;

use crate::gas::GasMeter;
use crate::types::{Digest, EntryId, TimeKey};

pub use proof::{verify_range, ChildProof, NodeProof, RadixNodeProof, RangeVo, SlotProof, VoMode};
use radix::BucketRadix;

pub type NodeId = usize;

pub const DEFAULT_BRANCHING: usize = 16;
pub const DEFAULT_THRESHOLD: usize = 10;

/// Inclusive key interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyRange {
    pub lo: TimeKey,
    pub hi: TimeKey,
}

impl KeyRange {
    pub const FULL: KeyRange = KeyRange { lo: TimeKey::MIN, hi: TimeKey::MAX };

    pub fn contains(&self, k: TimeKey) -> bool {
        self.lo <= k && k <= self.hi
    }

    pub fn meets(&self, s: TimeKey, e: TimeKey) -> bool {
        self.lo <= e && self.hi >= s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BHashError {
    #[error("entry {0} is already indexed")]
    DuplicateEntry(EntryId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BHashConfig {
    /// Maximum entries per leaf and children per internal node.
    pub branching: usize,
    /// Population at which the next insert converts the tree. `None` keeps
    /// it a plain B+Tree.
    pub threshold: Option<usize>,
}

impl Default for BHashConfig {
    fn default() -> Self {
        BHashConfig { branching: DEFAULT_BRANCHING, threshold: Some(DEFAULT_THRESHOLD) }
    }
}

impl BHashConfig {
    pub fn bplus_only() -> Self {
        BHashConfig { threshold: None, ..Self::default() }
    }

    pub fn with_threshold(t: usize) -> Self {
        BHashConfig { threshold: Some(t), ..Self::default() }
    }
}

#[derive(Clone, Debug)]
pub struct HashNode {
    buckets: BTreeMap<TimeKey, Vec<EntryId>>,
    radix: BucketRadix,
    fingerprint: Digest,
}

#[derive(Clone, Debug)]
pub enum NodeBody {
    Leaf {
        /// Sorted by `(key, entry_id)`.
        entries: Vec<(TimeKey, EntryId)>,
        /// Bucket digest of each key's id group, carried into the hash
        /// node on conversion.
        key_digests: BTreeMap<TimeKey, Digest>,
    },
    Hash(HashNode),
    Internal {
        children: Vec<NodeId>,
    },
}

#[derive(Clone, Debug)]
pub struct BHashNode {
    pub node_id: NodeId,
    pub key_range: KeyRange,
    pub body: NodeBody,
    pub node_digest: Digest,
}

impl BHashNode {
    pub fn is_leaf(&self) -> bool {
        !matches!(self.body, NodeBody::Internal { .. })
    }

    pub fn is_hash_node(&self) -> bool {
        matches!(self.body, NodeBody::Hash(_))
    }

    pub fn keys(&self) -> Vec<TimeKey> {
        match &self.body {
            NodeBody::Leaf { entries, .. } => entries.iter().map(|e| e.0).collect(),
            _ => Vec::new(),
        }
    }

    pub fn entry_ids(&self) -> Vec<EntryId> {
        match &self.body {
            NodeBody::Leaf { entries, .. } => entries.iter().map(|e| e.1).collect(),
            _ => Vec::new(),
        }
    }

    pub fn children(&self) -> &[NodeId] {
        match &self.body {
            NodeBody::Internal { children } => children,
            _ => &[],
        }
    }

    pub fn hash_buckets(&self) -> Option<&BTreeMap<TimeKey, Vec<EntryId>>> {
        match &self.body {
            NodeBody::Hash(h) => Some(&h.buckets),
            _ => None,
        }
    }

    pub fn bucket_digests(&self) -> Option<&BTreeMap<TimeKey, Digest>> {
        match &self.body {
            NodeBody::Hash(h) => Some(h.radix.bucket_digests()),
            _ => None,
        }
    }

    pub fn fingerprint(&self) -> Option<Digest> {
        match &self.body {
            NodeBody::Hash(h) => Some(h.fingerprint),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BHashTree {
    config: BHashConfig,
    nodes: Vec<BHashNode>,
    root: NodeId,
    ids: BTreeSet<EntryId>,
    converted: bool,
    root_digest: Digest,
    meter: Arc<GasMeter>,
}

impl Default for BHashTree {
    fn default() -> Self {
        Self::new(BHashConfig::default())
    }
}

impl BHashTree {
    pub fn new(config: BHashConfig) -> Self {
        Self::with_meter(config, Arc::new(GasMeter::default()))
    }

    pub fn with_meter(config: BHashConfig, meter: Arc<GasMeter>) -> Self {
        assert!(config.branching >= 2, "branching factor must be at least 2");
        let leaf = BHashNode {
            node_id: 0,
            key_range: KeyRange::FULL,
            body: NodeBody::Leaf { entries: Vec::new(), key_digests: BTreeMap::new() },
            node_digest: commit::leaf_digest(None, core::iter::empty()),
        };
        let root_digest = commit::root_anchor(None, false, &leaf.node_digest);
        BHashTree {
            config,
            nodes: alloc::vec![leaf],
            root: 0,
            ids: BTreeSet::new(),
            converted: false,
            root_digest,
            meter,
        }
    }

    pub fn config(&self) -> BHashConfig {
        self.config
    }

    pub fn meter(&self) -> &Arc<GasMeter> {
        &self.meter
    }

    /// A copy of this tree charging `meter` instead.
    pub fn fork(&self, meter: Arc<GasMeter>) -> Self {
        BHashTree { meter, ..self.clone() }
    }

    pub fn root_id(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &BHashNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[BHashNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn entry_count(&self) -> usize {
        self.ids.len()
    }

    pub fn is_converted(&self) -> bool {
        self.converted
    }

    pub fn root_digest(&self) -> Digest {
        self.root_digest
    }

    pub fn depth(&self) -> usize {
        let mut d = 1;
        let mut n = self.root;
        while let Some(&c) = self.nodes[n].children().first() {
            d += 1;
            n = c;
        }
        d
    }

    pub fn insert(&mut self, entry_id: EntryId, timestamp: u64) -> Result<(), BHashError> {
        if self.ids.contains(&entry_id) {
            return Err(BHashError::DuplicateEntry(entry_id));
        }
        if !self.converted && self.config.threshold.is_some_and(|t| self.ids.len() >= t) {
            self.convert();
        }
        self.ids.insert(entry_id);
        let key = TimeKey::from_timestamp(timestamp);
        let meter = Arc::clone(&self.meter);

        let mut path = Vec::new();
        let mut n = self.root;
        loop {
            meter.read(1);
            path.push(n);
            let NodeBody::Internal { children } = &self.nodes[n].body else { break };
            let i = children.partition_point(|&c| self.nodes[c].key_range.lo <= key);
            n = children[i - 1];
        }

        match &mut self.nodes[n].body {
            NodeBody::Leaf { entries, key_digests } => {
                let pos = entries.partition_point(|&p| p < (key, entry_id));
                entries.insert(pos, (key, entry_id));
                let ids: Vec<EntryId> =
                    entries.iter().filter(|p| p.0 == key).map(|p| p.1).collect();
                key_digests.insert(key, commit::bucket_digest(Some(&meter), key, &ids));
                meter.write(2);
            }
            NodeBody::Hash(h) => {
                let ids = h.buckets.entry(key).or_default();
                let pos = ids.partition_point(|&i| i < entry_id);
                ids.insert(pos, entry_id);
                meter.write(1);
                let d = commit::bucket_digest(Some(&meter), key, ids);
                h.radix.set_bucket(&meter, key, d);
            }
            NodeBody::Internal { .. } => unreachable!("descent ends at a leaf"),
        }

        // Split overflowing nodes bottom-up, then refresh digests bottom-up.
        // A new sibling must be refreshed after its level's path node, since
        // an internal split can move that path node under the sibling.
        let mut siblings = alloc::vec![None; path.len()];
        if !self.converted {
            for level in (0..path.len()).rev() {
                let id = path[level];
                let Some(right) = self.split(id) else { break };
                siblings[level] = Some(right);
                if level == 0 {
                    self.grow_root(id, right);
                } else {
                    let parent = path[level - 1];
                    let NodeBody::Internal { children } = &mut self.nodes[parent].body else {
                        unreachable!()
                    };
                    let at = children.iter().position(|&c| c == id).expect("child of parent");
                    children.insert(at + 1, right);
                    meter.write(1);
                }
            }
        }
        for level in (0..path.len()).rev() {
            self.refresh(path[level]);
            if let Some(right) = siblings[level] {
                self.refresh(right);
            }
        }
        if !self.nodes[self.root].children().is_empty() && !path.contains(&self.root) {
            self.refresh(self.root);
        }
        self.reanchor();
        Ok(())
    }

    /// Splits `id` if it overflows, returning the new right sibling.
    fn split(&mut self, id: NodeId) -> Option<NodeId> {
        let b = self.config.branching;
        let new_id = self.nodes.len();
        let node = &mut self.nodes[id];
        let (right_body, right_lo) = match &mut node.body {
            NodeBody::Leaf { entries, key_digests } => {
                if entries.len() <= b {
                    return None;
                }
                // Cut at the key boundary closest to the middle so a key's
                // entries never straddle two leaves.
                let mid = entries.len() / 2;
                let cut = (0..=mid)
                    .flat_map(|d| [mid.checked_sub(d), Some(mid + d)])
                    .flatten()
                    .find(|&i| i > 0 && i < entries.len() && entries[i - 1].0 != entries[i].0)?;
                let moved = entries.split_off(cut);
                let lo = moved[0].0;
                let moved_digests = key_digests.split_off(&lo);
                self.meter.write(moved.len() as u64 + moved_digests.len() as u64);
                (NodeBody::Leaf { entries: moved, key_digests: moved_digests }, lo)
            }
            NodeBody::Internal { children } => {
                if children.len() <= b {
                    return None;
                }
                let moved = children.split_off(children.len() / 2);
                self.meter.write(moved.len() as u64);
                let lo = self.nodes[moved[0]].key_range.lo;
                (NodeBody::Internal { children: moved }, lo)
            }
            NodeBody::Hash(_) => return None,
        };
        let node = &mut self.nodes[id];
        let hi = node.key_range.hi;
        node.key_range.hi = TimeKey(right_lo.0 - 1);
        self.nodes.push(BHashNode {
            node_id: new_id,
            key_range: KeyRange { lo: right_lo, hi },
            body: right_body,
            node_digest: Digest::ZERO,
        });
        Some(new_id)
    }

    fn grow_root(&mut self, left: NodeId, right: NodeId) {
        let id = self.nodes.len();
        self.nodes.push(BHashNode {
            node_id: id,
            key_range: KeyRange::FULL,
            body: NodeBody::Internal { children: alloc::vec![left, right] },
            node_digest: Digest::ZERO,
        });
        self.meter.write(2);
        self.root = id;
    }

    /// Recomputes one node's digest from its contents and child digests.
    fn refresh(&mut self, id: NodeId) {
        let meter = &*self.meter;
        let node = &self.nodes[id];
        let d = match &node.body {
            NodeBody::Leaf { entries, .. } => {
                commit::leaf_digest(Some(meter), entries.iter().map(|(k, i)| (k, i)))
            }
            NodeBody::Hash(h) => {
                commit::hash_node_digest(Some(meter), &h.fingerprint, node.key_range, &h.radix.root())
            }
            NodeBody::Internal { children } => {
                meter.read(children.len() as u64);
                let nodes = &self.nodes;
                commit::internal_digest(
                    Some(meter),
                    node.key_range,
                    children.iter().map(|&c| (nodes[c].key_range.lo, &nodes[c].node_digest)),
                )
            }
        };
        meter.write(1);
        self.nodes[id].node_digest = d;
    }

    fn reanchor(&mut self) {
        let root = self.nodes[self.root].node_digest;
        self.root_digest = commit::root_anchor(Some(&self.meter), self.converted, &root);
        self.meter.write(1);
    }

    /// Turns every leaf into a hash node and re-digests the internal nodes.
    fn convert(&mut self) {
        let meter = Arc::clone(&self.meter);
        let mut order = Vec::new();
        self.post_order(self.root, &mut order);
        for id in order {
            let node = &mut self.nodes[id];
            if let NodeBody::Leaf { entries, key_digests } = &mut node.body {
                let entries = core::mem::take(entries);
                let digests = core::mem::take(key_digests);
                let mut buckets: BTreeMap<TimeKey, Vec<EntryId>> = BTreeMap::new();
                for (k, i) in &entries {
                    buckets.entry(*k).or_default().push(*i);
                }
                let mut sorted: Vec<EntryId> = entries.iter().map(|e| e.1).collect();
                sorted.sort_unstable();
                meter.write(entries.len() as u64 + digests.len() as u64 + 1);
                let fingerprint = commit::fingerprint(Some(&meter), &sorted);
                let radix = BucketRadix::build(&meter, digests);
                node.body = NodeBody::Hash(HashNode { buckets, radix, fingerprint });
            }
            self.refresh(id);
        }
        self.converted = true;
        self.reanchor();
    }

    fn post_order(&self, id: NodeId, out: &mut Vec<NodeId>) {
        for &c in self.nodes[id].children() {
            self.post_order(c, out);
        }
        out.push(id);
    }

    /// Entries with `start_time ≤ timestamp ≤ end_time`, ordered by
    /// `(key, entry_id)`, and the proof for them.
    pub fn range_query(&self, start_time: u64, end_time: u64) -> (Vec<EntryId>, RangeVo) {
        let (s, e) = (TimeKey::from_timestamp(start_time), TimeKey::from_timestamp(end_time));
        let mode = if self.converted { VoMode::PostConversion } else { VoMode::PreConversion };
        let mut vo = RangeVo { claimed_root: self.root_digest, mode, start: s, end: e, proof: None };
        if s > e {
            // Nothing binds the mode without a proof, so it takes one fixed value.
            vo.mode = VoMode::PreConversion;
            return (Vec::new(), vo);
        }
        let mut found = Vec::new();
        vo.proof = Some(self.prove(self.root, s, e, &mut found));
        (found.into_iter().map(|(_, id)| id).collect(), vo)
    }

    fn prove(&self, id: NodeId, s: TimeKey, e: TimeKey, out: &mut Vec<(TimeKey, EntryId)>) -> NodeProof {
        let meter = &*self.meter;
        meter.read(1);
        match &self.nodes[id].body {
            NodeBody::Leaf { entries, .. } => {
                meter.read(entries.len() as u64);
                out.extend(entries.iter().filter(|(k, _)| s <= *k && *k <= e));
                NodeProof::Leaf { entries: entries.clone() }
            }
            NodeBody::Hash(h) => NodeProof::Hash {
                fingerprint: h.fingerprint,
                buckets: h.radix.prove(meter, &h.buckets, s.0, e.0, out),
            },
            NodeBody::Internal { children } => {
                let children = children
                    .iter()
                    .map(|&c| {
                        let child = &self.nodes[c];
                        let p = if child.key_range.meets(s, e) {
                            ChildProof::Opened(self.prove(c, s, e, out))
                        } else {
                            meter.read(1);
                            ChildProof::Pruned(child.node_digest)
                        };
                        (child.key_range.lo, p)
                    })
                    .collect();
                NodeProof::Internal { children }
            }
        }
    }

    /// Recomputes every digest and checks the structural invariants.
    /// Returns a description of the first violation.
    pub fn check_invariants(&self) -> Result<(), &'static str> {
        let mut seen = 0usize;
        let d = self.check_node(self.root, KeyRange::FULL, &mut seen)?;
        if seen != self.ids.len() {
            return Err("entry count does not match reachable entries");
        }
        if commit::root_anchor(None, self.converted, &d) != self.root_digest {
            return Err("root digest is stale");
        }
        Ok(())
    }

    fn check_node(&self, id: NodeId, range: KeyRange, seen: &mut usize) -> Result<Digest, &'static str> {
        let node = &self.nodes[id];
        if node.key_range != range {
            return Err("key range does not match parent partition");
        }
        let d = match &node.body {
            NodeBody::Leaf { entries, key_digests } => {
                if self.converted {
                    return Err("leaf left after conversion");
                }
                if !entries.windows(2).all(|w| w[0] < w[1]) || !entries.iter().all(|e| range.contains(e.0)) {
                    return Err("leaf entries unsorted or out of range");
                }
                let keys: BTreeSet<TimeKey> = entries.iter().map(|e| e.0).collect();
                if keys.len() != key_digests.len() {
                    return Err("per-key digests do not match keys");
                }
                for k in keys {
                    let ids: Vec<EntryId> = entries.iter().filter(|e| e.0 == k).map(|e| e.1).collect();
                    if key_digests.get(&k) != Some(&commit::bucket_digest(None, k, &ids)) {
                        return Err("stale per-key digest");
                    }
                }
                *seen += entries.len();
                commit::leaf_digest(None, entries.iter().map(|(k, i)| (k, i)))
            }
            NodeBody::Hash(h) => {
                if !self.converted {
                    return Err("hash node before conversion");
                }
                if h.buckets.len() != h.radix.bucket_digests().len() {
                    return Err("bucket digests do not match buckets");
                }
                for (k, ids) in &h.buckets {
                    if !range.contains(*k) || ids.is_empty() || !ids.windows(2).all(|w| w[0] < w[1]) {
                        return Err("bad bucket");
                    }
                    if h.radix.bucket_digests().get(k) != Some(&commit::bucket_digest(None, *k, ids)) {
                        return Err("stale bucket digest");
                    }
                    *seen += ids.len();
                }
                let rebuilt = BucketRadix::build(&GasMeter::default(), h.radix.bucket_digests().clone());
                if rebuilt.inner_nodes() != h.radix.inner_nodes() {
                    return Err("stale bucket commitment");
                }
                commit::hash_node_digest(None, &h.fingerprint, range, &rebuilt.root())
            }
            NodeBody::Internal { children } => {
                if children.is_empty() {
                    return Err("internal node without children");
                }
                let mut digests = Vec::with_capacity(children.len());
                for (i, &c) in children.iter().enumerate() {
                    let lo = self.nodes[c].key_range.lo;
                    let hi = match children.get(i + 1) {
                        Some(&n) => TimeKey(self.nodes[n].key_range.lo.0.wrapping_sub(1)),
                        None => range.hi,
                    };
                    if (i == 0 && lo != range.lo) || hi < lo {
                        return Err("children do not partition the node range");
                    }
                    digests.push((lo, self.check_node(c, KeyRange { lo, hi }, seen)?));
                }
                commit::internal_digest(None, range, digests.iter().map(|(k, d)| (*k, d)))
            }
        };
        if d != node.node_digest {
            return Err("stale node digest");
        }
        Ok(d)
    }
}

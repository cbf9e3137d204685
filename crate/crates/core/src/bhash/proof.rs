//! Range verification objects.
//!
//! A [`RangeVo`] is the part of the tree a verifier needs to recompute the
//! anchored root for one query: every node whose key range meets the query
//! interval is opened, every other child is replaced by its digest. Child
//! key ranges are committed in their parent's digest, so a pruned child is
//! provably outside the interval and no in-range entry can be withheld.
//!
//! Wire layout (all items as in [`crate::codec`]):
//!
//! ```text
//! RangeVo    10 | Digest claimed_root | u8 mode (0 pre, 1 post)
//!               | TimeKey start | TimeKey end | 00 (no proof) | 01 Node
//! Node       00 | u32 n | n × (TimeKey key, u64 entry_id)        leaf
//!            01 | Digest fingerprint | Radix                     hash node
//!            02 | u32 n | n × (TimeKey child_lo, Child)          internal
//! Child      00 | Digest  (pruned)  or  01 | Node  (opened)
//! Radix      u8 slot states, 2 bits per slot, slot 0 in the low bits
//!            (0 empty, 1 pruned, 2 opened), then per non-empty slot in
//!            order: Digest (pruned), Radix (opened inner node) or an id
//!            list (opened bucket, bottom level only)
//! ```

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::codec::{decode_id_list, encode_id_list, tag, CodecError, Decode, Decoder, Encode, Encoder};
use crate::types::{Digest, EntryId, TimeKey};

use super::radix::{self, FANOUT, LEVELS};
use super::{commit, KeyRange};

/// Deepest internal-node nesting accepted when decoding.
const MAX_TREE_DEPTH: usize = 48;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VoMode {
    PreConversion,
    PostConversion,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum SlotProof {
    #[default]
    Empty,
    Pruned(Digest),
    Opened(Box<RadixNodeProof>),
    Bucket(Vec<EntryId>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RadixNodeProof {
    pub slots: [SlotProof; FANOUT],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeProof {
    Leaf { entries: Vec<(TimeKey, EntryId)> },
    Hash { fingerprint: Digest, buckets: RadixNodeProof },
    Internal { children: Vec<(TimeKey, ChildProof)> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChildProof {
    Pruned(Digest),
    Opened(NodeProof),
}

/// Where a frontier digest sits: child indices from the root, continuing
/// with radix slot indices inside a hash node.
pub type Position = Vec<u8>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RangeVo {
    pub claimed_root: Digest,
    pub mode: VoMode,
    pub start: TimeKey,
    pub end: TimeKey,
    /// `None` only for an inverted range, whose mode is always
    /// `PreConversion`.
    pub proof: Option<NodeProof>,
}

impl RangeVo {
    /// Entries inside `[start, end]` revealed by the proof, in
    /// `(key, entry_id)` order. Unverified.
    pub fn in_range_entries(&self) -> Vec<(TimeKey, EntryId)> {
        let mut out = Vec::new();
        if let Some(p) = &self.proof {
            walk_entries(p, 0, &mut |k, id| {
                if self.start <= k && k <= self.end {
                    out.push((k, id));
                }
            });
        }
        out
    }

    /// Digests standing in for subtrees and buckets outside the range.
    pub fn frontier_digests(&self) -> Vec<(Position, Digest)> {
        let mut out = Vec::new();
        if let Some(p) = &self.proof {
            frontier_node(p, &mut Vec::new(), &mut out);
        }
        out
    }

    /// Nearest revealed keys below `start` and above `end`.
    pub fn boundary_keys(&self) -> (Option<TimeKey>, Option<TimeKey>) {
        let (mut below, mut above) = (None, None);
        if let Some(p) = &self.proof {
            walk_entries(p, 0, &mut |k, _| {
                if k < self.start {
                    below = below.max(Some(k));
                } else if k > self.end {
                    above = Some(above.map_or(k, |a: TimeKey| a.min(k)));
                }
            });
        }
        (below, above)
    }

    pub fn encoded_len(&self) -> usize {
        self.to_canonical_bytes().len()
    }
}

fn walk_entries(p: &NodeProof, _depth: usize, f: &mut impl FnMut(TimeKey, EntryId)) {
    match p {
        NodeProof::Leaf { entries } => entries.iter().for_each(|(k, id)| f(*k, *id)),
        NodeProof::Hash { buckets, .. } => walk_radix(buckets, 0, f),
        NodeProof::Internal { children } => {
            for (_, c) in children {
                if let ChildProof::Opened(n) = c {
                    walk_entries(n, 0, f);
                }
            }
        }
    }
}

fn walk_radix(r: &RadixNodeProof, prefix: u64, f: &mut impl FnMut(TimeKey, EntryId)) {
    for (c, slot) in r.slots.iter().enumerate() {
        let cp = (prefix << radix::BITS) | c as u64;
        match slot {
            SlotProof::Opened(n) => walk_radix(n, cp, f),
            SlotProof::Bucket(ids) => ids.iter().for_each(|id| f(TimeKey(cp), *id)),
            _ => {}
        }
    }
}

fn frontier_node(p: &NodeProof, pos: &mut Position, out: &mut Vec<(Position, Digest)>) {
    match p {
        NodeProof::Leaf { .. } => {}
        NodeProof::Hash { buckets, .. } => frontier_radix(buckets, pos, out),
        NodeProof::Internal { children } => {
            for (i, (_, c)) in children.iter().enumerate() {
                pos.push(i as u8);
                match c {
                    ChildProof::Pruned(d) => out.push((pos.clone(), *d)),
                    ChildProof::Opened(n) => frontier_node(n, pos, out),
                }
                pos.pop();
            }
        }
    }
}

fn frontier_radix(r: &RadixNodeProof, pos: &mut Position, out: &mut Vec<(Position, Digest)>) {
    for (c, slot) in r.slots.iter().enumerate() {
        pos.push(c as u8);
        match slot {
            SlotProof::Pruned(d) => out.push((pos.clone(), *d)),
            SlotProof::Opened(n) => frontier_radix(n, pos, out),
            _ => {}
        }
        pos.pop();
    }
}

/// Checks `results` against `vo` and the trusted anchored root.
///
/// Returns true iff the proof recomputes `trusted_root`, it was issued for
/// exactly `[start_time, end_time]`, and the in-range entries it reveals
/// are exactly `results` in `(key, entry_id)` order. Never panics on
/// malformed input.
pub fn verify_range(
    vo: &RangeVo,
    trusted_root: &Digest,
    start_time: u64,
    end_time: u64,
    results: &[EntryId],
) -> bool {
    let (s, e) = (TimeKey::from_timestamp(start_time), TimeKey::from_timestamp(end_time));
    if vo.claimed_root != *trusted_root || vo.start != s || vo.end != e {
        return false;
    }
    let Some(proof) = &vo.proof else {
        return s > e && vo.mode == VoMode::PreConversion && results.is_empty();
    };
    if s > e {
        return false;
    }
    let mut found = Vec::new();
    let ctx = Ctx { s: s.0, e: e.0, mode: vo.mode };
    let Some(root_node) = ctx.node(proof, KeyRange::FULL, 0, &mut found) else {
        return false;
    };
    let converted = vo.mode == VoMode::PostConversion;
    if commit::root_anchor(None, converted, &root_node) != *trusted_root {
        return false;
    }
    found.len() == results.len() && found.iter().zip(results).all(|((_, a), b)| a == b)
}

struct Ctx {
    s: u64,
    e: u64,
    mode: VoMode,
}

impl Ctx {
    fn meets(&self, lo: u64, hi: u64) -> bool {
        lo <= self.e && hi >= self.s
    }

    /// Recomputes the digest of a node covering `range`.
    fn node(
        &self,
        p: &NodeProof,
        range: KeyRange,
        depth: usize,
        found: &mut Vec<(TimeKey, EntryId)>,
    ) -> Option<Digest> {
        if depth > MAX_TREE_DEPTH {
            return None;
        }
        match p {
            NodeProof::Leaf { entries } => {
                if self.mode != VoMode::PreConversion {
                    return None;
                }
                if !entries.windows(2).all(|w| w[0] < w[1]) {
                    return None;
                }
                for &(k, id) in entries {
                    if !range.contains(k) {
                        return None;
                    }
                    if self.s <= k.0 && k.0 <= self.e {
                        found.push((k, id));
                    }
                }
                Some(commit::leaf_digest(None, entries.iter().map(|(k, id)| (k, id))))
            }
            NodeProof::Hash { fingerprint, buckets } => {
                if self.mode != VoMode::PostConversion {
                    return None;
                }
                let mut local = Vec::new();
                let root = self.radix(buckets, 0, 0, &mut local)?;
                if local.iter().any(|(k, _)| !range.contains(*k)) {
                    return None;
                }
                found.append(&mut local);
                Some(commit::hash_node_digest(None, fingerprint, range, &root))
            }
            NodeProof::Internal { children } => {
                let first = children.first()?;
                if first.0 != range.lo {
                    return None;
                }
                let mut digests = Vec::with_capacity(children.len());
                for (i, (lo, child)) in children.iter().enumerate() {
                    let hi = match children.get(i + 1) {
                        Some((next, _)) if next > lo && *next > range.lo => TimeKey(next.0 - 1),
                        Some(_) => return None,
                        None => range.hi,
                    };
                    if *lo > range.hi || hi < *lo {
                        return None;
                    }
                    let child_range = KeyRange { lo: *lo, hi };
                    let d = match child {
                        ChildProof::Pruned(d) if !self.meets(lo.0, hi.0) => *d,
                        ChildProof::Opened(n) if self.meets(lo.0, hi.0) => {
                            self.node(n, child_range, depth + 1, found)?
                        }
                        _ => return None,
                    };
                    digests.push((*lo, d));
                }
                Some(commit::internal_digest(None, range, digests.iter().map(|(k, d)| (*k, d))))
            }
        }
    }

    fn radix(
        &self,
        r: &RadixNodeProof,
        level: u32,
        prefix: u64,
        found: &mut Vec<(TimeKey, EntryId)>,
    ) -> Option<Digest> {
        let mut digests: [Option<Digest>; FANOUT] = [None; FANOUT];
        for (c, slot) in r.slots.iter().enumerate() {
            let cl = level + 1;
            let cp = (prefix << radix::BITS) | c as u64;
            let (lo, hi) = radix::span(cl, cp);
            digests[c] = match slot {
                SlotProof::Empty => None,
                SlotProof::Pruned(d) if !self.meets(lo, hi) => Some(*d),
                SlotProof::Opened(n) if cl < LEVELS && self.meets(lo, hi) => {
                    Some(self.radix(n, cl, cp, found)?)
                }
                SlotProof::Bucket(ids) if cl == LEVELS && self.meets(lo, hi) => {
                    if ids.is_empty() || !ids.windows(2).all(|w| w[0] < w[1]) {
                        return None;
                    }
                    found.extend(ids.iter().map(|id| (TimeKey(cp), *id)));
                    Some(commit::bucket_digest(None, TimeKey(cp), ids))
                }
                _ => return None,
            };
        }
        Some(commit::radix_digest(None, digests.iter().map(Option::as_ref)))
    }
}

impl Encode for RangeVo {
    fn encode(&self, out: &mut Encoder) {
        out.u8(tag::RANGE_VO).item(&self.claimed_root);
        out.u8(match self.mode {
            VoMode::PreConversion => 0,
            VoMode::PostConversion => 1,
        });
        out.item(&self.start).item(&self.end);
        match &self.proof {
            None => {
                out.u8(0);
            }
            Some(p) => {
                out.u8(1);
                encode_node(out, p);
            }
        }
    }
}

fn encode_node(out: &mut Encoder, p: &NodeProof) {
    match p {
        NodeProof::Leaf { entries } => {
            out.u8(0).count(entries.len());
            for (k, id) in entries {
                out.item(k).u64(*id);
            }
        }
        NodeProof::Hash { fingerprint, buckets } => {
            out.u8(1).item(fingerprint);
            encode_radix(out, buckets);
        }
        NodeProof::Internal { children } => {
            out.u8(2).count(children.len());
            for (lo, c) in children {
                out.item(lo);
                match c {
                    ChildProof::Pruned(d) => {
                        out.u8(0).item(d);
                    }
                    ChildProof::Opened(n) => {
                        out.u8(1);
                        encode_node(out, n);
                    }
                }
            }
        }
    }
}

fn encode_radix(out: &mut Encoder, r: &RadixNodeProof) {
    let mut states = 0u8;
    for (c, slot) in r.slots.iter().enumerate() {
        let s = match slot {
            SlotProof::Empty => 0,
            SlotProof::Pruned(_) => 1,
            SlotProof::Opened(_) | SlotProof::Bucket(_) => 2,
        };
        states |= s << (2 * c);
    }
    out.u8(states);
    for slot in &r.slots {
        match slot {
            SlotProof::Empty => {}
            SlotProof::Pruned(d) => {
                out.item(d);
            }
            SlotProof::Opened(n) => encode_radix(out, n),
            SlotProof::Bucket(ids) => encode_id_list(out, ids),
        }
    }
}

impl Decode for RangeVo {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, CodecError> {
        d.expect_tag(tag::RANGE_VO)?;
        let claimed_root = d.item()?;
        let mode = match d.u8()? {
            0 => VoMode::PreConversion,
            1 => VoMode::PostConversion,
            _ => return Err(d.invalid("vo mode")),
        };
        let start = d.item()?;
        let end = d.item()?;
        let proof = match d.u8()? {
            0 => None,
            1 => Some(decode_node(d, 0)?),
            _ => return Err(d.invalid("proof flag")),
        };
        Ok(RangeVo { claimed_root, mode, start, end, proof })
    }
}

fn decode_node(d: &mut Decoder<'_>, depth: usize) -> Result<NodeProof, CodecError> {
    if depth > MAX_TREE_DEPTH {
        return Err(CodecError::TooDeep(MAX_TREE_DEPTH));
    }
    match d.u8()? {
        0 => {
            let n = d.count(17)?;
            let entries = (0..n)
                .map(|_| Ok((d.item()?, d.u64()?)))
                .collect::<Result<_, CodecError>>()?;
            Ok(NodeProof::Leaf { entries })
        }
        1 => {
            let fingerprint = d.item()?;
            let buckets = decode_radix(d, 0)?;
            Ok(NodeProof::Hash { fingerprint, buckets })
        }
        2 => {
            let n = d.count(10)?;
            let mut children = Vec::with_capacity(n);
            for _ in 0..n {
                let lo = d.item()?;
                let c = match d.u8()? {
                    0 => ChildProof::Pruned(d.item()?),
                    1 => ChildProof::Opened(decode_node(d, depth + 1)?),
                    _ => return Err(d.invalid("child flag")),
                };
                children.push((lo, c));
            }
            Ok(NodeProof::Internal { children })
        }
        _ => Err(d.invalid("node kind")),
    }
}

fn decode_radix(d: &mut Decoder<'_>, level: u32) -> Result<RadixNodeProof, CodecError> {
    let states = d.u8()?;
    let mut slots: [SlotProof; FANOUT] = Default::default();
    // FANOUT slots × 2 bits fill the state byte exactly when FANOUT == 4.
    if FANOUT < 4 && states >> (2 * FANOUT) != 0 {
        return Err(d.invalid("radix slot states"));
    }
    for (c, slot) in slots.iter_mut().enumerate() {
        *slot = match (states >> (2 * c)) & 3 {
            0 => SlotProof::Empty,
            1 => SlotProof::Pruned(d.item()?),
            2 if level + 1 == LEVELS => SlotProof::Bucket(decode_id_list(d)?),
            2 => SlotProof::Opened(Box::new(decode_radix(d, level + 1)?)),
            _ => return Err(d.invalid("radix slot state")),
        };
    }
    Ok(RadixNodeProof { slots })
}

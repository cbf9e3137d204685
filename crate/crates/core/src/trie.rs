//! Verifiable prefix index over a fixed 18-character alphabet.
//!
//! Each node's digest commits to its own character, its terminal entry ids
//! and the `(index, digest)` pairs of its children, so the root digest
//! commits to the whole key set. A [`PrefixVo`] carries the descent path
//! with sibling digests and either the full subtree under the prefix node
//! or, when the prefix is absent, the node where the descent stopped.
//!
//! Insertion and descent are loops, not recursion, so key length never
//! translates into call depth.
//!
//! Wire layout:
//!
//! ```text
//! PrefixVo  11 | Digest claimed_root | u32 n | n × Step | End
//! Step      u8 char_index | ids | u32 m | m × (u8 index, Digest)
//! End       00 | Subtree   or   01 | ids | u32 k | k × (u8 index, Digest)
//! Subtree   ids | u32 k | k × (u8 index, Subtree)
//! ids       an id list (List tag, count, bare u64s)
//! ```

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use thiserror::Error;

use crate::codec::{decode_id_list, encode_id_list, tag, CodecError, Decode, Decoder, Encode, Encoder};
use crate::digest::{compression_blocks, digest, DomainTag};
use crate::gas::GasMeter;
use crate::types::{Digest, EntryId};

pub const ALPHABET: &[u8; 18] = b"0123456789abcdef-:";
pub const MAX_KEY_LEN: usize = 64;
/// Character byte committed for the root node.
const ROOT_CHAR: u8 = 0xff;

/// Index of `c` in [`ALPHABET`].
pub fn char_index(c: u8) -> Option<u8> {
    match c {
        b'0'..=b'9' => Some(c - b'0'),
        b'a'..=b'f' => Some(c - b'a' + 10),
        b'-' => Some(16),
        b':' => Some(17),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrieError {
    #[error("invalid character {0:?} at position {1}")]
    InvalidCharacter(char, usize),
    #[error("key of {0} characters exceeds the limit of 64")]
    KeyTooLong(usize),
    #[error("empty key")]
    EmptyKey,
}

pub type TrieNodeId = usize;

#[derive(Clone, Debug)]
pub struct TrieNode {
    pub node_id: TrieNodeId,
    /// Alphabet index of the edge into this node; `None` for the root.
    pub ch: Option<u8>,
    pub children: BTreeMap<u8, TrieNodeId>,
    /// Sorted, deduplicated; non-empty iff the node is terminal.
    pub entry_ids: Vec<EntryId>,
    pub node_digest: Digest,
}

impl TrieNode {
    pub fn is_terminal(&self) -> bool {
        !self.entry_ids.is_empty()
    }
}

fn node_digest<'a>(
    meter: Option<&GasMeter>,
    ch: Option<u8>,
    entry_ids: &[EntryId],
    children: impl ExactSizeIterator<Item = (u8, &'a Digest)>,
) -> Digest {
    let mut e = Encoder::new();
    e.u8(ch.unwrap_or(ROOT_CHAR)).bool(!entry_ids.is_empty());
    encode_id_list(&mut e, entry_ids);
    e.list_header(children.len());
    for (i, d) in children {
        e.u8(i).item(d);
    }
    if let Some(m) = meter {
        m.compute(compression_blocks(e.as_bytes().len()));
    }
    digest(DomainTag::TrieNode, e.as_bytes())
}

/// Where a descent ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Descent {
    /// Node reached after consuming the whole prefix, if it exists.
    pub node: Option<TrieNodeId>,
    /// Nodes on the path, root first, up to the last one reached.
    pub depth: usize,
    /// Child hops taken.
    pub visits: usize,
}

#[derive(Clone, Debug)]
pub struct Trie {
    nodes: Vec<TrieNode>,
    key_count: usize,
    meter: Arc<GasMeter>,
}

impl Default for Trie {
    fn default() -> Self {
        Self::new()
    }
}

impl Trie {
    pub fn new() -> Self {
        Self::with_meter(Arc::new(GasMeter::default()))
    }

    pub fn with_meter(meter: Arc<GasMeter>) -> Self {
        let root = TrieNode {
            node_id: 0,
            ch: None,
            children: BTreeMap::new(),
            entry_ids: Vec::new(),
            node_digest: node_digest(None, None, &[], core::iter::empty()),
        };
        Trie { nodes: alloc::vec![root], key_count: 0, meter }
    }

    pub fn meter(&self) -> &Arc<GasMeter> {
        &self.meter
    }

    pub fn root_digest(&self) -> Digest {
        self.nodes[0].node_digest
    }

    pub fn node(&self, id: TrieNodeId) -> &TrieNode {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Distinct keys stored.
    pub fn key_count(&self) -> usize {
        self.key_count
    }

    pub fn validate_key(key: &str) -> Result<Vec<u8>, TrieError> {
        if key.is_empty() {
            return Err(TrieError::EmptyKey);
        }
        let n = key.chars().count();
        if n > MAX_KEY_LEN {
            return Err(TrieError::KeyTooLong(n));
        }
        key.chars()
            .enumerate()
            .map(|(pos, c)| {
                u8::try_from(c)
                    .ok()
                    .and_then(char_index)
                    .ok_or(TrieError::InvalidCharacter(c, pos))
            })
            .collect()
    }

    pub fn insert(&mut self, key: &str, entry_id: EntryId) -> Result<(), TrieError> {
        let indices = Self::validate_key(key)?;
        let meter = Arc::clone(&self.meter);
        let mut path = Vec::with_capacity(indices.len() + 1);
        let mut n = 0;
        path.push(n);
        meter.read(1);
        for &i in &indices {
            n = match self.nodes[n].children.get(&i) {
                Some(&c) => c,
                None => {
                    let id = self.nodes.len();
                    self.nodes.push(TrieNode {
                        node_id: id,
                        ch: Some(i),
                        children: BTreeMap::new(),
                        entry_ids: Vec::new(),
                        node_digest: Digest::ZERO,
                    });
                    self.nodes[n].children.insert(i, id);
                    meter.write(2);
                    id
                }
            };
            meter.read(1);
            path.push(n);
        }
        let ids = &mut self.nodes[n].entry_ids;
        if ids.is_empty() {
            self.key_count += 1;
        }
        match ids.binary_search(&entry_id) {
            Ok(_) => return Ok(()),
            Err(pos) => ids.insert(pos, entry_id),
        }
        meter.write(1);
        for &id in path.iter().rev() {
            let node = &self.nodes[id];
            let nodes = &self.nodes;
            let d = node_digest(
                Some(&meter),
                node.ch,
                &node.entry_ids,
                node.children.iter().map(|(&i, &c)| (i, &nodes[c].node_digest)),
            );
            meter.read(node.children.len() as u64);
            meter.write(1);
            self.nodes[id].node_digest = d;
        }
        Ok(())
    }

    /// Walks down `prefix` one character per step.
    pub fn descend(&self, prefix: &str) -> Descent {
        let mut n = 0;
        let mut visits = 0;
        for b in prefix.bytes() {
            let next = char_index(b).and_then(|i| self.nodes[n].children.get(&i));
            match next {
                Some(&c) => {
                    n = c;
                    visits += 1;
                }
                None => return Descent { node: None, depth: visits + 1, visits },
            }
        }
        Descent { node: Some(n), depth: visits + 1, visits }
    }

    /// Ids of every key starting with `prefix`, ascending and deduplicated,
    /// with the proof.
    pub fn prefix_query(&self, prefix: &str) -> (Vec<EntryId>, PrefixVo) {
        let meter = &*self.meter;
        let mut path = Vec::new();
        let mut n = 0;
        meter.read(1);
        for b in prefix.bytes() {
            let node = &self.nodes[n];
            let Some((i, &c)) = char_index(b).and_then(|i| node.children.get_key_value(&i)) else {
                meter.read(node.children.len() as u64);
                let end = PrefixEnd::Diverged {
                    entry_ids: node.entry_ids.clone(),
                    children: self.child_digests(n, None),
                };
                let vo = PrefixVo { claimed_root: self.root_digest(), path, end };
                return (Vec::new(), vo);
            };
            meter.read(node.children.len() as u64);
            path.push(PathStep {
                char_index: *i,
                entry_ids: node.entry_ids.clone(),
                siblings: self.child_digests(n, Some(*i)),
            });
            n = c;
        }
        let subtree = self.subtree(n);
        let mut ids = subtree.all_ids();
        ids.sort_unstable();
        ids.dedup();
        let vo = PrefixVo { claimed_root: self.root_digest(), path, end: PrefixEnd::Matched(subtree) };
        (ids, vo)
    }

    fn child_digests(&self, n: TrieNodeId, skip: Option<u8>) -> Vec<(u8, Digest)> {
        self.nodes[n]
            .children
            .iter()
            .filter(|(i, _)| Some(**i) != skip)
            .map(|(&i, &c)| (i, self.nodes[c].node_digest))
            .collect()
    }

    fn subtree(&self, root: TrieNodeId) -> Subtree {
        // Explicit stack: (node, parent slot in the output arena).
        let mut arena: Vec<ArenaNode> = Vec::new();
        let mut stack = alloc::vec![(root, None::<(usize, u8)>)];
        while let Some((n, parent)) = stack.pop() {
            self.meter.read(1);
            let slot = arena.len();
            arena.push((self.nodes[n].entry_ids.clone(), Vec::new()));
            if let Some((p, i)) = parent {
                arena[p].1.push((i, slot));
            }
            for (&i, &c) in self.nodes[n].children.iter().rev() {
                stack.push((c, Some((slot, i))));
            }
        }
        // Children were pushed in reverse, so each child list is ascending.
        let mut built: Vec<Option<Subtree>> = (0..arena.len()).map(|_| None).collect();
        for slot in (0..arena.len()).rev() {
            let (ids, kids) = core::mem::take(&mut arena[slot]);
            let children = kids
                .into_iter()
                .map(|(i, s)| (i, built[s].take().expect("child built before parent")))
                .collect();
            built[slot] = Some(Subtree { entry_ids: ids, children });
        }
        built[0].take().expect("root built")
    }

    /// Recomputes every digest bottom-up and compares with the stored ones.
    pub fn check_digests(&self) -> bool {
        // Children always have larger ids than their parent.
        let mut computed = alloc::vec![Digest::ZERO; self.nodes.len()];
        for node in self.nodes.iter().rev() {
            let d = node_digest(
                None,
                node.ch,
                &node.entry_ids,
                node.children.iter().map(|(&i, &c)| (i, &computed[c])),
            );
            if d != node.node_digest {
                return false;
            }
            computed[node.node_id] = d;
        }
        true
    }
}

/// Entry ids and (symbol, arena slot) children of a subtree node.
type ArenaNode = (Vec<EntryId>, Vec<(u8, usize)>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathStep {
    /// Child taken from this node.
    pub char_index: u8,
    /// This node's own terminal ids.
    pub entry_ids: Vec<EntryId>,
    /// Digests of the other children.
    pub siblings: Vec<(u8, Digest)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Subtree {
    pub entry_ids: Vec<EntryId>,
    pub children: Vec<(u8, Subtree)>,
}

impl Subtree {
    fn all_ids(&self) -> Vec<EntryId> {
        let mut out = Vec::new();
        let mut stack = alloc::vec![self];
        while let Some(s) = stack.pop() {
            out.extend_from_slice(&s.entry_ids);
            stack.extend(s.children.iter().map(|(_, c)| c));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PrefixEnd {
    Matched(Subtree),
    /// The descent stopped at this node: the next prefix character has no
    /// child here.
    Diverged { entry_ids: Vec<EntryId>, children: Vec<(u8, Digest)> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixVo {
    pub claimed_root: Digest,
    pub path: Vec<PathStep>,
    pub end: PrefixEnd,
}

impl PrefixVo {
    /// Sorted ids the proof claims match the prefix. Unverified.
    pub fn result_ids(&self) -> Vec<EntryId> {
        match &self.end {
            PrefixEnd::Matched(sub) => {
                let mut ids = sub.all_ids();
                ids.sort_unstable();
                ids.dedup();
                ids
            }
            PrefixEnd::Diverged { .. } => Vec::new(),
        }
    }

    pub fn encoded_len(&self) -> usize {
        self.to_canonical_bytes().len()
    }
}

fn strictly_ascending<T: Ord>(v: impl Iterator<Item = T>) -> bool {
    let mut prev = None;
    for x in v {
        if prev.as_ref().is_some_and(|p| *p >= x) {
            return false;
        }
        prev = Some(x);
    }
    true
}

fn valid_children<T>(c: &[(u8, T)]) -> bool {
    strictly_ascending(c.iter().map(|(i, _)| *i)) && c.iter().all(|(i, _)| usize::from(*i) < ALPHABET.len())
}

/// Digest of a fully revealed subtree; `None` if it is malformed.
fn subtree_digest(s: &Subtree, ch: Option<u8>, found: &mut Vec<EntryId>) -> Option<Digest> {
    // Post-order without recursion: (node, own char, expanded?).
    let mut stack = alloc::vec![(s, ch, false)];
    let mut done: Vec<Digest> = Vec::new();
    while let Some((n, c, expanded)) = stack.pop() {
        if !valid_children(&n.children) || !strictly_ascending(n.entry_ids.iter()) {
            return None;
        }
        if !expanded {
            stack.push((n, c, true));
            for (i, child) in n.children.iter().rev() {
                stack.push((child, Some(*i), false));
            }
            continue;
        }
        found.extend_from_slice(&n.entry_ids);
        let k = n.children.len();
        let kids = done.split_off(done.len() - k);
        let d = node_digest(None, c, &n.entry_ids, n.children.iter().map(|(i, _)| *i).zip(kids.iter()));
        done.push(d);
    }
    done.pop()
}

/// Checks `results` for `prefix` against `vo` and the trusted root.
///
/// True iff the proof recomputes `trusted_root`, its path spells `prefix`
/// (or stops where the next character provably has no child), and
/// `results` equals the ascending deduplicated ids of the revealed subtree.
pub fn verify_prefix(vo: &PrefixVo, trusted_root: &Digest, prefix: &str, results: &[EntryId]) -> bool {
    if vo.claimed_root != *trusted_root {
        return false;
    }
    let pbytes = prefix.as_bytes();
    if vo.path.len() > pbytes.len() {
        return false;
    }
    for (step, &b) in vo.path.iter().zip(pbytes) {
        if char_index(b) != Some(step.char_index) {
            return false;
        }
        if !valid_children(&step.siblings)
            || step.siblings.iter().any(|(i, _)| *i == step.char_index)
            || !strictly_ascending(step.entry_ids.iter())
        {
            return false;
        }
    }
    let own = vo.path.last().map(|s| s.char_index);
    let mut d = match &vo.end {
        PrefixEnd::Matched(sub) => {
            if vo.path.len() != pbytes.len() {
                return false;
            }
            let mut found = Vec::new();
            let Some(d) = subtree_digest(sub, own, &mut found) else { return false };
            found.sort_unstable();
            found.dedup();
            if found != results {
                return false;
            }
            d
        }
        PrefixEnd::Diverged { entry_ids, children } => {
            let Some(&next) = pbytes.get(vo.path.len()) else { return false };
            if !results.is_empty() || !valid_children(children) || !strictly_ascending(entry_ids.iter()) {
                return false;
            }
            if let Some(i) = char_index(next) {
                if children.iter().any(|(c, _)| *c == i) {
                    return false;
                }
            }
            node_digest(None, own, entry_ids, children.iter().map(|(i, d)| (*i, d)))
        }
    };
    for (k, step) in vo.path.iter().enumerate().rev() {
        let own = if k == 0 { None } else { Some(vo.path[k - 1].char_index) };
        let mut children: Vec<(u8, Digest)> = step.siblings.clone();
        let pos = children.partition_point(|(i, _)| *i < step.char_index);
        children.insert(pos, (step.char_index, d));
        d = node_digest(None, own, &step.entry_ids, children.iter().map(|(i, d)| (*i, d)));
    }
    d == *trusted_root
}

const MAX_SUBTREE_DEPTH: usize = MAX_KEY_LEN + 1;

fn encode_pairs(out: &mut Encoder, pairs: &[(u8, Digest)]) {
    out.count(pairs.len());
    for (i, d) in pairs {
        out.u8(*i).item(d);
    }
}

fn decode_pairs(d: &mut Decoder<'_>) -> Result<Vec<(u8, Digest)>, CodecError> {
    let n = d.count(34)?;
    (0..n).map(|_| Ok((d.u8()?, d.item()?))).collect()
}

fn encode_subtree(out: &mut Encoder, s: &Subtree) {
    encode_id_list(out, &s.entry_ids);
    out.count(s.children.len());
    for (i, c) in &s.children {
        out.u8(*i);
        encode_subtree(out, c);
    }
}

fn decode_subtree(d: &mut Decoder<'_>, depth: usize) -> Result<Subtree, CodecError> {
    if depth > MAX_SUBTREE_DEPTH {
        return Err(CodecError::TooDeep(MAX_SUBTREE_DEPTH));
    }
    let entry_ids = decode_id_list(d)?;
    let n = d.count(10)?;
    let mut children = Vec::with_capacity(n);
    for _ in 0..n {
        let i = d.u8()?;
        children.push((i, decode_subtree(d, depth + 1)?));
    }
    Ok(Subtree { entry_ids, children })
}

impl Encode for PrefixVo {
    fn encode(&self, out: &mut Encoder) {
        out.u8(tag::PREFIX_VO).item(&self.claimed_root);
        out.count(self.path.len());
        for s in &self.path {
            out.u8(s.char_index);
            encode_id_list(out, &s.entry_ids);
            encode_pairs(out, &s.siblings);
        }
        match &self.end {
            PrefixEnd::Matched(sub) => {
                out.u8(0);
                encode_subtree(out, sub);
            }
            PrefixEnd::Diverged { entry_ids, children } => {
                out.u8(1);
                encode_id_list(out, entry_ids);
                encode_pairs(out, children);
            }
        }
    }
}

impl Decode for PrefixVo {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, CodecError> {
        d.expect_tag(tag::PREFIX_VO)?;
        let claimed_root = d.item()?;
        let n = d.count(10)?;
        let mut path = Vec::with_capacity(n);
        for _ in 0..n {
            let char_index = d.u8()?;
            let entry_ids = decode_id_list(d)?;
            let siblings = decode_pairs(d)?;
            path.push(PathStep { char_index, entry_ids, siblings });
        }
        let end = match d.u8()? {
            0 => PrefixEnd::Matched(decode_subtree(d, 0)?),
            1 => PrefixEnd::Diverged { entry_ids: decode_id_list(d)?, children: decode_pairs(d)? },
            _ => return Err(d.invalid("prefix end kind")),
        };
        Ok(PrefixVo { claimed_root, path, end })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_key(rng: &mut ChaCha8Rng, len: usize) -> String {
        (0..len).map(|_| ALPHABET[rng.random_range(0..16)] as char).collect()
    }

    #[test]
    fn alphabet_is_a_bijection() {
        for (i, &c) in ALPHABET.iter().enumerate() {
            assert_eq!(char_index(c), Some(i as u8));
        }
        assert_eq!(char_index(b'0'), Some(0));
        assert_eq!((0..=255u8).filter_map(char_index).count(), 18);
    }

    #[test]
    fn key_validation() {
        let mut t = Trie::new();
        assert_eq!(t.insert("2023_01", 1), Err(TrieError::InvalidCharacter('_', 4)));
        assert_eq!(t.insert("", 1), Err(TrieError::EmptyKey));
        let long: String = core::iter::repeat_n('a', 65).collect();
        assert_eq!(t.insert(&long, 1), Err(TrieError::KeyTooLong(65)));
        assert!(t.insert(&long[..64], 1).is_ok());
    }

    #[test]
    fn prefix_containment() {
        let mut t = Trie::new();
        t.insert("2023-01-15", 7).unwrap();
        let (r, vo) = t.prefix_query("2023");
        assert_eq!(r, vec![7]);
        assert!(verify_prefix(&vo, &t.root_digest(), "2023", &r));
    }

    #[test]
    fn empty_prefix_returns_everything() {
        let mut t = Trie::new();
        for (i, k) in ["ab", "a", "ffff", "12:30"].iter().enumerate() {
            t.insert(k, i as u64).unwrap();
        }
        let (r, vo) = t.prefix_query("");
        assert_eq!(r, vec![0, 1, 2, 3]);
        assert!(verify_prefix(&vo, &t.root_digest(), "", &r));
    }

    #[test]
    fn non_membership() {
        let mut t = Trie::new();
        t.insert("abc", 1).unwrap();
        t.insert("abd", 2).unwrap();
        let root = t.root_digest();
        for p in ["abcdef", "abe", "x", "ab_"] {
            let (r, vo) = t.prefix_query(p);
            assert!(r.is_empty());
            assert!(matches!(vo.end, PrefixEnd::Diverged { .. }));
            assert!(verify_prefix(&vo, &root, p, &r), "{p}");
        }
        // An absence proof for "abe" cannot be reused for "abc".
        let (_, vo) = t.prefix_query("abe");
        assert!(!verify_prefix(&vo, &root, "abc", &[]));
    }

    #[test]
    fn empty_trie_proves_absence() {
        let t = Trie::new();
        let (r, vo) = t.prefix_query("12");
        assert!(r.is_empty());
        assert!(verify_prefix(&vo, &t.root_digest(), "12", &r));
        let (r, vo) = t.prefix_query("");
        assert!(r.is_empty());
        assert!(verify_prefix(&vo, &t.root_digest(), "", &r));
    }

    #[test]
    fn oracle_equivalence_and_descent_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut t = Trie::new();
        let mut keys = Vec::new();
        for id in 0..2_000u64 {
            let len = rng.random_range(1..=24);
            let k = random_key(&mut rng, len);
            t.insert(&k, id).unwrap();
            keys.push(k);
        }
        assert!(t.check_digests());
        for (id, k) in keys.iter().enumerate() {
            let (r, _) = t.prefix_query(k);
            assert!(r.contains(&(id as u64)));
        }
        for _ in 0..200 {
            let src = &keys[rng.random_range(0..keys.len())];
            let p = if rng.random_bool(0.8) {
                String::from(&src[..rng.random_range(0..=src.len())])
            } else {
                random_key(&mut rng, 6)
            };
            let mut want: Vec<u64> = keys
                .iter()
                .enumerate()
                .filter(|(_, k)| k.starts_with(p.as_str()))
                .map(|(i, _)| i as u64)
                .collect();
            want.sort_unstable();
            let (r, vo) = t.prefix_query(&p);
            assert_eq!(r, want, "{p}");
            assert!(verify_prefix(&vo, &t.root_digest(), &p, &r));
            let bytes = vo.to_canonical_bytes();
            assert_eq!(PrefixVo::from_canonical_bytes(&bytes).unwrap(), vo);
            let d = t.descend(&p);
            if d.node.is_some() {
                assert_eq!(d.visits, p.len());
            }
        }
    }

    #[test]
    fn tampering_is_detected() {
        let mut t = Trie::new();
        for (i, k) in ["a1", "a12", "a2", "b", "a1f", "a1-", "c:"].iter().enumerate() {
            t.insert(k, i as u64).unwrap();
        }
        let root = t.root_digest();
        for p in ["a1", "a", "a3", ""] {
            let (r, vo) = t.prefix_query(p);
            let bytes = vo.to_canonical_bytes();
            for pos in 0..bytes.len() {
                for bit in 0..8 {
                    let mut m = bytes.clone();
                    m[pos] ^= 1 << bit;
                    if let Ok(bad) = PrefixVo::from_canonical_bytes(&m) {
                        assert!(!verify_prefix(&bad, &root, p, &r), "escape {p} byte {pos} bit {bit}");
                    }
                }
            }
            for extra in 0..10u64 {
                if !r.contains(&extra) {
                    let mut more = r.clone();
                    more.push(extra);
                    more.sort_unstable();
                    assert!(!verify_prefix(&vo, &root, p, &more));
                }
            }
        }
    }

    #[test]
    fn same_id_under_two_keys_is_reported_once() {
        let mut t = Trie::new();
        t.insert("ab", 3).unwrap();
        t.insert("ac", 3).unwrap();
        let (r, vo) = t.prefix_query("a");
        assert_eq!(r, vec![3]);
        assert!(verify_prefix(&vo, &t.root_digest(), "a", &r));
    }
}

//! Deterministic append-only ledger.
//!
//! Each block carries a batch of entries, the supersessions (updates and
//! deletes) issued in that batch, and the index roots after applying it.
//! Blocks are chained by digest, so rewriting any historical block breaks
//! verification at the block after it.
//!
//! ```text
//! Block         12 | u64 height | Digest prev | u64 timestamp
//!                  | List<DataEntry> | List<Supersession>
//!                  | Digest bhash_root | Digest trie_root | Digest block_digest
//! Supersession  13 | u64 target | 00  or  01 | u64 replacement
//! ```
//!
//! `block_digest` is `H(04 ‖ encoding without the tag and the trailing
//! block digest)`, with `prev` moved to the front.

use alloc::sync::Arc;
use alloc::vec::Vec;

use thiserror::Error;

use crate::codec::{tag, CodecError, Decode, Decoder, Encode, Encoder};
use crate::digest::{compression_blocks, digest, DomainTag};
use crate::gas::GasMeter;
use crate::types::{DataEntry, Digest, EntryError, EntryId};

/// Marks `target` as replaced by a newer version, or deleted when
/// `replacement` is `None`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Supersession {
    pub target: EntryId,
    pub replacement: Option<EntryId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnchoredRoots {
    pub bhash: Digest,
    pub trie: Digest,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub height: u64,
    pub prev_digest: Digest,
    /// Largest entry timestamp in the block, else the predecessor's.
    pub timestamp: u64,
    pub entries: Vec<DataEntry>,
    pub supersessions: Vec<Supersession>,
    pub anchored_roots: AnchoredRoots,
    pub block_digest: Digest,
}

impl Block {
    fn digest_payload(&self) -> Encoder {
        let mut e = Encoder::new();
        e.item(&self.prev_digest).u64(self.height).u64(self.timestamp);
        e.item(&self.entries).item(&self.supersessions);
        e.item(&self.anchored_roots.bhash).item(&self.anchored_roots.trie);
        e
    }

    pub fn compute_digest(&self) -> Digest {
        digest(DomainTag::RootAnchor, self.digest_payload().as_bytes())
    }
}

impl Encode for Supersession {
    fn encode(&self, out: &mut Encoder) {
        out.u8(tag::SUPERSESSION).u64(self.target);
        match self.replacement {
            None => out.u8(0),
            Some(r) => out.u8(1).u64(r),
        };
    }
}

impl Decode for Supersession {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, CodecError> {
        d.expect_tag(tag::SUPERSESSION)?;
        let target = d.u64()?;
        let replacement = match d.u8()? {
            0 => None,
            1 => Some(d.u64()?),
            _ => return Err(d.invalid("replacement flag")),
        };
        Ok(Supersession { target, replacement })
    }
}

impl Encode for Block {
    fn encode(&self, out: &mut Encoder) {
        out.u8(tag::BLOCK).u64(self.height).item(&self.prev_digest).u64(self.timestamp);
        out.item(&self.entries).item(&self.supersessions);
        out.item(&self.anchored_roots.bhash).item(&self.anchored_roots.trie);
        out.item(&self.block_digest);
    }
}

impl Decode for Block {
    fn decode(d: &mut Decoder<'_>) -> Result<Self, CodecError> {
        d.expect_tag(tag::BLOCK)?;
        let height = d.u64()?;
        let prev_digest = d.item()?;
        let timestamp = d.u64()?;
        let entries = d.item()?;
        let supersessions = d.item()?;
        let anchored_roots = AnchoredRoots { bhash: d.item()?, trie: d.item()? };
        let block_digest = d.item()?;
        Ok(Block { height, prev_digest, timestamp, entries, supersessions, anchored_roots, block_digest })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("entry ids must continue at {expected}, found {found}")]
    NonDenseEntryIds { expected: EntryId, found: EntryId },
    #[error("no block at height {0}")]
    UnknownHeight(u64),
    #[error("invalid entry {id}: {source}")]
    InvalidEntry { id: EntryId, source: EntryError },
    #[error("supersession of entry {target} refers to an unknown entry")]
    UnknownSupersessionTarget { target: EntryId },
    #[error("chain broken at height {0}")]
    BrokenChain(u64),
}

#[derive(Debug, Clone, Default)]
pub struct Ledger {
    blocks: Vec<Block>,
    next_entry_id: EntryId,
    meter: Arc<GasMeter>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_meter(meter: Arc<GasMeter>) -> Self {
        Ledger { meter, ..Self::default() }
    }

    /// Rebuilds a ledger from stored blocks, checking the whole chain.
    pub fn from_blocks(blocks: Vec<Block>, meter: Arc<GasMeter>) -> Result<Self, LedgerError> {
        let next_entry_id = blocks.iter().map(|b| b.entries.len() as u64).sum();
        let ledger = Ledger { blocks, next_entry_id, meter };
        ledger.verify_chain()?;
        Ok(ledger)
    }

    pub fn meter(&self) -> &Arc<GasMeter> {
        &self.meter
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, height: u64) -> Result<&Block, LedgerError> {
        usize::try_from(height)
            .ok()
            .and_then(|h| self.blocks.get(h))
            .ok_or(LedgerError::UnknownHeight(height))
    }

    pub fn head(&self) -> Option<&Block> {
        self.blocks.last()
    }

    pub fn next_entry_id(&self) -> EntryId {
        self.next_entry_id
    }

    pub fn append_block(&mut self, entries: Vec<DataEntry>, roots: AnchoredRoots) -> Result<&Block, LedgerError> {
        self.append_block_with(entries, Vec::new(), roots)
    }

    pub fn append_block_with(
        &mut self,
        entries: Vec<DataEntry>,
        supersessions: Vec<Supersession>,
        roots: AnchoredRoots,
    ) -> Result<&Block, LedgerError> {
        for (k, e) in entries.iter().enumerate() {
            let expected = self.next_entry_id + k as u64;
            if e.entry_id != expected {
                return Err(LedgerError::NonDenseEntryIds { expected, found: e.entry_id });
            }
            e.validate().map_err(|source| LedgerError::InvalidEntry { id: e.entry_id, source })?;
        }
        let limit = self.next_entry_id + entries.len() as u64;
        for s in &supersessions {
            if s.target >= limit || s.replacement.is_some_and(|r| r >= limit) {
                return Err(LedgerError::UnknownSupersessionTarget { target: s.target });
            }
        }
        let (height, prev_digest, prev_ts) = match self.blocks.last() {
            Some(b) => (b.height + 1, b.block_digest, b.timestamp),
            None => (0, Digest::ZERO, 0),
        };
        let timestamp = entries.iter().map(|e| e.timestamp).max().unwrap_or(prev_ts);
        let mut block = Block {
            height,
            prev_digest,
            timestamp,
            entries,
            supersessions,
            anchored_roots: roots,
            block_digest: Digest::ZERO,
        };
        let payload = block.digest_payload();
        self.meter.compute(compression_blocks(payload.as_bytes().len()));
        self.meter.write(block.entries.len() as u64 + block.supersessions.len() as u64 + 3);
        block.block_digest = digest(DomainTag::RootAnchor, payload.as_bytes());
        self.next_entry_id = limit;
        self.blocks.push(block);
        Ok(self.blocks.last().expect("just pushed"))
    }

    /// The index roots anchored at `height`.
    pub fn trusted_root(&self, height: u64) -> Result<AnchoredRoots, LedgerError> {
        self.meter.read(2);
        Ok(self.block(height)?.anchored_roots)
    }

    /// Checks heights, links, dense ids and every block digest.
    pub fn verify_chain(&self) -> Result<(), LedgerError> {
        let mut prev = Digest::ZERO;
        let mut next_id = 0;
        for (h, b) in self.blocks.iter().enumerate() {
            let h = h as u64;
            if b.height != h || b.prev_digest != prev || b.compute_digest() != b.block_digest {
                return Err(LedgerError::BrokenChain(h));
            }
            for e in &b.entries {
                if e.entry_id != next_id {
                    return Err(LedgerError::BrokenChain(h));
                }
                next_id += 1;
            }
            prev = b.block_digest;
        }
        Ok(())
    }
}

//! Query results and their canonical encoding.
//!
//! ```text
//! ResultSet  21 | u64 anchor_height | u32 n | n × Row | Vo
//! Row        DataEntry | opt image | opt video      (opt = 00 | 01 bytes)
//! Vo         00 | 01 RangeVo | 02 PrefixVo
//! ```

use hybridq_core::bhash::RangeVo;
use hybridq_core::codec::tag;
use hybridq_core::trie::PrefixVo;
use hybridq_core::{DataEntry, Encode, Encoder, EntryId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QueryVo {
    Range(RangeVo),
    Prefix(PrefixVo),
}

impl QueryVo {
    pub fn encoded_len(&self) -> usize {
        match self {
            QueryVo::Range(v) => v.encoded_len(),
            QueryVo::Prefix(v) => v.encoded_len(),
        }
    }

    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        match self {
            QueryVo::Range(v) => v.to_canonical_bytes(),
            QueryVo::Prefix(v) => v.to_canonical_bytes(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub entry: DataEntry,
    pub image: Option<Vec<u8>>,
    pub video: Option<Vec<u8>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResultSet {
    /// Sorted by entry id.
    pub rows: Vec<Row>,
    /// `None` for point reads, which are checked against their block.
    pub vo: Option<QueryVo>,
    /// Height whose anchored roots verified this result.
    pub anchor_height: u64,
}

impl ResultSet {
    pub fn entry_ids(&self) -> Vec<EntryId> {
        self.rows.iter().map(|r| r.entry.entry_id).collect()
    }
}

fn opt_bytes(out: &mut Encoder, b: &Option<Vec<u8>>) {
    match b {
        None => out.u8(0),
        Some(b) => out.u8(1).bytes(b),
    };
}

impl Encode for ResultSet {
    fn encode(&self, out: &mut Encoder) {
        out.u8(tag::RESULT_SET).u64(self.anchor_height).count(self.rows.len());
        for r in &self.rows {
            out.item(&r.entry);
            opt_bytes(out, &r.image);
            opt_bytes(out, &r.video);
        }
        match &self.vo {
            None => {
                out.u8(0);
            }
            Some(QueryVo::Range(v)) => {
                out.u8(1).item(v);
            }
            Some(QueryVo::Prefix(v)) => {
                out.u8(2).item(v);
            }
        }
    }
}

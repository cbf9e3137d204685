//! On-disk engine state.
//!
//! ```text
//! <state>/meta.json      index variant and threshold
//! <state>/blocks.bin     per block: u32 BE length | canonical block bytes
//! <state>/blocks.jsonl   human-readable export of the same blocks
//! <state>/objects/       payload store
//! ```
//!
//! Only the block log is authoritative. Opening a state directory replays
//! it and checks the index roots against every anchored pair.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use hybridq_core::bhash::BHashConfig;
use hybridq_core::codec::CodecError;
use hybridq_core::gas::GasReport;
use hybridq_core::ledger::Block;
use hybridq_core::{Decode, Encode};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::engine::{Engine, EngineConfig, EngineError};
use crate::store::{DirStore, StoreError};

pub const META_FILE: &str = "meta.json";
pub const BLOCK_LOG: &str = "blocks.bin";
pub const BLOCK_EXPORT: &str = "blocks.jsonl";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("no engine state at {0}")]
    Missing(String),
    #[error("block log: {0}")]
    Codec(#[from] CodecError),
    #[error("block log truncated")]
    Truncated,
    #[error("meta.json: {0}")]
    Meta(#[from] serde_json::Error),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum IndexVariant {
    Bhash,
    BplusOnly,
}

impl IndexVariant {
    pub fn config(self, threshold: usize) -> BHashConfig {
        match self {
            IndexVariant::Bhash => BHashConfig::with_threshold(threshold),
            IndexVariant::BplusOnly => BHashConfig::bplus_only(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateMeta {
    pub index_variant: IndexVariant,
    pub threshold_t: usize,
}

impl StateMeta {
    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig { bhash: self.index_variant.config(self.threshold_t), ..Default::default() }
    }
}

pub fn encode_block_log(blocks: &[Block]) -> Vec<u8> {
    let mut out = Vec::new();
    for b in blocks {
        let bytes = b.to_canonical_bytes();
        out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
        out.extend_from_slice(&bytes);
    }
    out
}

pub fn decode_block_log(mut bytes: &[u8]) -> Result<Vec<Block>, PersistError> {
    let mut blocks = Vec::new();
    while !bytes.is_empty() {
        let (len, rest) = bytes.split_first_chunk::<4>().ok_or(PersistError::Truncated)?;
        let len = u32::from_be_bytes(*len) as usize;
        if rest.len() < len {
            return Err(PersistError::Truncated);
        }
        blocks.push(Block::from_canonical_bytes(&rest[..len])?);
        bytes = &rest[len..];
    }
    Ok(blocks)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// One JSON object per block.
pub fn export_blocks_jsonl(blocks: &[Block], out: impl Write) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    for b in blocks {
        let entries: Vec<_> = b
            .entries
            .iter()
            .map(|e| {
                json!({
                    "entry_id": e.entry_id,
                    "amount": e.amount,
                    "addresses": e.addresses.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
                    "timestamp": e.timestamp,
                    "imagecid": e.image_cid.map(|c| c.to_string()),
                    "videocid": e.video_cid.map(|c| c.to_string()),
                })
            })
            .collect();
        let sups: Vec<_> =
            b.supersessions.iter().map(|s| json!({ "target": s.target, "replacement": s.replacement })).collect();
        let line = json!({
            "height": b.height,
            "prev_digest": b.prev_digest.to_string(),
            "timestamp": b.timestamp,
            "entries": entries,
            "supersessions": sups,
            "bhash_root": b.anchored_roots.bhash.to_string(),
            "trie_root": b.anchored_roots.trie.to_string(),
            "block_digest": b.block_digest.to_string(),
        });
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn save(engine: &Engine, dir: &Path, meta: &StateMeta) -> Result<(), PersistError> {
    fs::create_dir_all(dir)?;
    let blocks = engine.blocks();
    write_atomic(&dir.join(BLOCK_LOG), &encode_block_log(&blocks))?;
    write_atomic(&dir.join(META_FILE), &serde_json::to_vec_pretty(meta)?)?;
    let mut export = Vec::new();
    export_blocks_jsonl(&blocks, &mut export)?;
    write_atomic(&dir.join(BLOCK_EXPORT), &export)?;
    Ok(())
}

pub fn read_meta(dir: &Path) -> Result<StateMeta, PersistError> {
    let path = dir.join(META_FILE);
    if !path.exists() {
        return Err(PersistError::Missing(dir.display().to_string()));
    }
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

/// Opens the state at `dir`, or creates an empty one with `meta` if the
/// directory holds none.
pub fn open_or_create(dir: &Path, meta: StateMeta) -> Result<(Engine, StateMeta), PersistError> {
    match read_meta(dir) {
        Ok(_) => open(dir),
        Err(PersistError::Missing(_)) => {
            let store = Arc::new(DirStore::open(dir)?);
            let engine = Engine::new(meta.engine_config(), store);
            save(&engine, dir, &meta)?;
            Ok((engine, meta))
        }
        Err(e) => Err(e),
    }
}

pub fn open(dir: &Path) -> Result<(Engine, StateMeta), PersistError> {
    let meta = read_meta(dir)?;
    let blocks = decode_block_log(&fs::read(dir.join(BLOCK_LOG))?)?;
    let store = Arc::new(DirStore::open(dir)?);
    Ok((Engine::from_blocks(meta.engine_config(), store, blocks)?, meta))
}

#[derive(Serialize)]
struct GasRow<'a> {
    op: &'a str,
    writes: u64,
    reads: u64,
    compute: u64,
    total_gas: u64,
}

pub fn write_gas_csv(reports: &[GasReport], out: impl Write) -> Result<(), PersistError> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(GasRow {
            op: &r.op,
            writes: r.counters.storage_writes,
            reads: r.counters.storage_reads,
            compute: r.counters.compute_units,
            total_gas: r.total_gas,
        })?;
    }
    w.flush()?;
    Ok(())
}

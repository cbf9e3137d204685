//! Seeded synthetic workloads.
//!
//! A dataset directory holds `workload.json` (the workload parameters that produced it),
//! `entries.jsonl` (one record per entry, in block order) and an `objects/`
//! payload store. Block arrivals follow a Poisson process: inter-arrival
//! times are exponential with rate `timestamp_density` blocks per second,
//! and every entry of a block carries the block's floored timestamp.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use hybridq_core::sql::{FuzzyField, NewEntry, QueryAst, SimplePredicate};
use hybridq_core::types::{timestamp_string, EntryError};
use hybridq_core::{Address, ContentId};
use rand::seq::IndexedRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{ContentStore, DirStore, StoreError};

pub const WORKLOAD_FILE: &str = "workload.json";
pub const ENTRIES_FILE: &str = "entries.jsonl";
pub const BASE_TIMESTAMP: u64 = 1_600_000_000;
pub const MAX_BLOCKS: usize = 16_384;
pub const IMAGE_BYTES: usize = 2 * 1024;
pub const VIDEO_BYTES: usize = 64 * 1024;
const ADDRESS_POOL: usize = 64;
const MAX_ADDRESSES: usize = 3;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid workload: {0}")]
    InvalidSpec(String),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: bad {field}")]
    BadField { line: usize, field: &'static str },
    #[error(transparent)]
    Entry(#[from] EntryError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Probability that an entry carries an image or a video; the remainder
/// carries neither.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayloadMix {
    pub image: f64,
    pub video: f64,
}

impl Default for PayloadMix {
    fn default() -> Self {
        PayloadMix { image: 0.3, video: 0.02 }
    }
}

/// Number of generated selects per primitive at each bench scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryMix {
    pub simple: usize,
    pub time_range: usize,
    pub fuzzy: usize,
}

impl Default for QueryMix {
    fn default() -> Self {
        QueryMix { simple: 20, time_range: 20, fuzzy: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub n_blocks: usize,
    pub entries_per_block: usize,
    /// Block arrival rate in blocks per second.
    pub timestamp_density: f64,
    pub payload_mix: PayloadMix,
    pub query_mix: QueryMix,
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            n_blocks: 1024,
            entries_per_block: 4,
            timestamp_density: 1.0 / 12.0,
            payload_mix: PayloadMix::default(),
            query_mix: QueryMix::default(),
            seed: 0,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: &str| Err(DatasetError::InvalidSpec(m.to_string()));
        if !self.n_blocks.is_power_of_two() || self.n_blocks > MAX_BLOCKS {
            return bad("n_blocks must be a power of two up to 16384");
        }
        if self.entries_per_block == 0 {
            return bad("entries_per_block must be positive");
        }
        if !(self.timestamp_density.is_finite() && self.timestamp_density > 0.0) {
            return bad("timestamp_density must be a positive rate");
        }
        let PayloadMix { image, video } = self.payload_mix;
        if !(0.0..=1.0).contains(&image) || !(0.0..=1.0).contains(&video) || image + video > 1.0 {
            return bad("payload fractions must lie in [0, 1] and sum to at most 1");
        }
        Ok(())
    }
}

/// One line of `entries.jsonl`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub amount: u128,
    pub addresses: Vec<String>,
    pub timestamp: u64,
    pub imagecid: Option<String>,
    pub videocid: Option<String>,
}

impl EntryRecord {
    /// The insert for this record. Payloads are referenced by cid and must
    /// already be in the engine's store.
    pub fn to_new_entry(&self, line: usize) -> Result<NewEntry, DatasetError> {
        let cid = |s: &Option<String>, field| {
            s.as_deref()
                .map(|h| ContentId::from_hex(h).ok_or(DatasetError::BadField { line, field }))
                .transpose()
        };
        Ok(NewEntry {
            amount: self.amount,
            addresses: self.addresses.iter().map(|a| a.parse()).collect::<Result<_, EntryError>>()?,
            timestamp: self.timestamp,
            image_cid: cid(&self.imagecid, "imagecid")?,
            video_cid: cid(&self.videocid, "videocid")?,
            image: None,
            video: None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub spec: WorkloadSpec,
    /// `spec.n_blocks * spec.entries_per_block` records in block order.
    pub records: Vec<EntryRecord>,
}

impl Dataset {
    /// The first `n_blocks` blocks as insert batches.
    pub fn blocks(&self, n_blocks: usize) -> Result<Vec<Vec<NewEntry>>, DatasetError> {
        let per = self.spec.entries_per_block;
        let n = (n_blocks * per).min(self.records.len());
        self.records[..n]
            .chunks(per)
            .enumerate()
            .map(|(b, chunk)| {
                chunk.iter().enumerate().map(|(i, r)| r.to_new_entry(b * per + i + 1)).collect()
            })
            .collect()
    }
}

fn payload(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
    let mut b = vec![0u8; len];
    rng.fill_bytes(&mut b);
    b
}

/// Generates the workload, writing payloads into `store`.
pub fn generate(spec: &WorkloadSpec, store: &dyn ContentStore) -> Result<Dataset, DatasetError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pool: Vec<Address> = (0..ADDRESS_POOL).map(|_| Address(rng.random())).collect();
    let arrivals = Exp::new(spec.timestamp_density).map_err(|e| DatasetError::InvalidSpec(e.to_string()))?;
    let mut clock = 0.0f64;
    let mut records = Vec::with_capacity(spec.n_blocks * spec.entries_per_block);
    for _ in 0..spec.n_blocks {
        clock += arrivals.sample(&mut rng);
        let timestamp = BASE_TIMESTAMP + clock.floor() as u64;
        for _ in 0..spec.entries_per_block {
            let n_addr = rng.random_range(1..=MAX_ADDRESSES);
            let addresses = pool.choose_multiple(&mut rng, n_addr).map(|a| a.to_string()).collect();
            let amount = rng.random_range(1..=1_000_000_000_000_000_000u128);
            let u: f64 = rng.random();
            let (mut imagecid, mut videocid) = (None, None);
            if u < spec.payload_mix.image {
                imagecid = Some(store.put(&payload(&mut rng, IMAGE_BYTES))?.to_string());
            } else if u < spec.payload_mix.image + spec.payload_mix.video {
                videocid = Some(store.put(&payload(&mut rng, VIDEO_BYTES))?.to_string());
            }
            records.push(EntryRecord { amount, addresses, timestamp, imagecid, videocid });
        }
    }
    Ok(Dataset { spec: spec.clone(), records })
}

/// Generates a dataset directory at `dir`.
pub fn write_dataset(dir: &Path, spec: &WorkloadSpec) -> Result<Dataset, DatasetError> {
    let store = DirStore::open(dir)?;
    let ds = generate(spec, &store)?;
    fs::write(dir.join(WORKLOAD_FILE), serde_json::to_vec_pretty(spec).expect("spec serializes"))?;
    let mut out = BufWriter::new(fs::File::create(dir.join(ENTRIES_FILE))?);
    for r in &ds.records {
        serde_json::to_writer(&mut out, r).expect("records serialize");
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(ds)
}

pub fn read_dataset(dir: &Path) -> Result<Dataset, DatasetError> {
    let spec: WorkloadSpec = serde_json::from_slice(&fs::read(dir.join(WORKLOAD_FILE))?)
        .map_err(|source| DatasetError::Json { line: 0, source })?;
    spec.validate()?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(fs::File::open(dir.join(ENTRIES_FILE))?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|source| DatasetError::Json { line: i + 1, source })?;
        records.push(r);
    }
    Ok(Dataset { spec, records })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Primitive {
    Simple,
    TimeRange,
    Fuzzy,
}

impl Primitive {
    pub const ALL: [Primitive; 3] = [Primitive::Simple, Primitive::TimeRange, Primitive::Fuzzy];

    pub fn name(self) -> &'static str {
        match self {
            Primitive::Simple => "simple",
            Primitive::TimeRange => "time_range",
            Primitive::Fuzzy => "fuzzy",
        }
    }
}

/// Select templates over the first `n_entries` records. Time ranges are
/// random sub-intervals of the covered span; fuzzy prefixes are random
/// length truncations of existing timestamp strings; point reads pick a
/// random entry id.
pub fn generate_queries(ds: &Dataset, n_entries: usize, mix: &QueryMix) -> Vec<(Primitive, QueryAst)> {
    let records = &ds.records[..n_entries.min(ds.records.len())];
    if records.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ds.spec.seed);
    rng.set_stream(n_entries as u64 + 1);
    let lo = records.first().unwrap().timestamp;
    let hi = records.last().unwrap().timestamp;
    let mut out = Vec::with_capacity(mix.simple + mix.time_range + mix.fuzzy);
    for _ in 0..mix.simple {
        let id = rng.random_range(0..records.len() as u64);
        out.push((Primitive::Simple, QueryAst::SelectSimple(SimplePredicate::EntryId(id))));
    }
    for _ in 0..mix.time_range {
        let a = rng.random_range(lo..=hi);
        let b = rng.random_range(lo..=hi);
        out.push((Primitive::TimeRange, QueryAst::SelectTimeRange { start: a.min(b), end: a.max(b) }));
    }
    for _ in 0..mix.fuzzy {
        let ts = records.choose(&mut rng).unwrap().timestamp;
        let s = timestamp_string(ts);
        let len = rng.random_range(1..=s.len());
        out.push((Primitive::Fuzzy, QueryAst::SelectFuzzy { field: FuzzyField::TimestampString, prefix: s[..len].to_string() }));
    }
    out
}

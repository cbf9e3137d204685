//! Benchmark harness.
//!
//! Each scale ingests a prefix of the dataset into a fresh engine, times
//! the generated selects (cache bypassed, median over repetitions), records
//! mean VO sizes, then meters one insert, update and delete.

use std::fmt::Write as _;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use hybridq_core::gas::{GasCounters, GasMeter};
use hybridq_core::sql::{EntryChanges, NewEntry};
use hybridq_core::Address;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{generate_queries, Dataset, DatasetError, Primitive};
use crate::engine::{Engine, EngineConfig, EngineError};
use crate::persist::IndexVariant;
use crate::store::ContentStore;

pub const MIN_REPS: usize = 5;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("scale {scale} exceeds the dataset's {available} blocks")]
    ScaleTooLarge { scale: usize, available: usize },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchOptions {
    pub variant: IndexVariant,
    pub threshold_t: usize,
    pub reps: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { variant: IndexVariant::Bhash, threshold_t: 10, reps: MIN_REPS }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub n_blocks: usize,
    pub entries: usize,
    pub index_variant: IndexVariant,
    pub converted: bool,
    pub insert_cpu_ms: f64,
    pub latency_ms_simple: f64,
    pub latency_ms_time_range: f64,
    pub latency_ms_fuzzy: f64,
    pub vo_bytes_simple: f64,
    pub vo_bytes_time_range: f64,
    pub vo_bytes_fuzzy: f64,
    /// Storage writes of one index insert after ingestion.
    pub index_insert_writes: u64,
    pub index_insert_gas: u64,
    pub gas_insert: u64,
    pub gas_update: u64,
    pub gas_delete: u64,
    pub chain_head: String,
    pub bhash_root: String,
    pub trie_root: String,
}

impl BenchRow {
    /// The row with wall-clock columns zeroed.
    pub fn without_timings(&self) -> BenchRow {
        BenchRow {
            insert_cpu_ms: 0.0,
            latency_ms_simple: 0.0,
            latency_ms_time_range: 0.0,
            latency_ms_fuzzy: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BenchReport {
    /// Sorted by `n_blocks`.
    pub rows: Vec<BenchRow>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn mean(v: &[usize]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<usize>() as f64 / v.len() as f64
    }
}

fn gas(meter: &GasMeter, before: &GasCounters) -> u64 {
    meter.counters().since(before).total_gas(&meter.costs())
}

pub fn run_bench(
    ds: &Dataset,
    store: Arc<dyn ContentStore>,
    scales: &[usize],
    opts: &BenchOptions,
) -> Result<BenchReport, BenchError> {
    let mut scales = scales.to_vec();
    scales.sort_unstable();
    scales.dedup();
    let reps = opts.reps.max(MIN_REPS);
    let mut rows = Vec::with_capacity(scales.len());
    for scale in scales {
        if scale > ds.spec.n_blocks {
            return Err(BenchError::ScaleTooLarge { scale, available: ds.spec.n_blocks });
        }
        let config = EngineConfig { bhash: opts.variant.config(opts.threshold_t), ..Default::default() };
        let engine = Engine::new(config, Arc::clone(&store));
        let blocks = ds.blocks(scale)?;
        let entries: usize = blocks.iter().map(Vec::len).sum();

        let t0 = Instant::now();
        for b in blocks {
            engine.insert_batch(b)?;
        }
        let insert_cpu_ms = t0.elapsed().as_secs_f64() * 1e3;

        let queries = generate_queries(ds, entries, &ds.spec.query_mix);
        let mut latency = [0.0; 3];
        let mut vo_bytes = [0.0; 3];
        for (k, p) in Primitive::ALL.into_iter().enumerate() {
            let qs: Vec<_> = queries.iter().filter(|(q, _)| *q == p).map(|(_, a)| a).collect();
            if qs.is_empty() {
                continue;
            }
            let mut sizes = Vec::with_capacity(qs.len());
            let mut per_rep = Vec::with_capacity(reps);
            for rep in 0..reps {
                let t = Instant::now();
                for q in &qs {
                    let rs = engine.select_uncached(q)?;
                    if rep == 0 {
                        sizes.push(rs.vo.as_ref().map_or(0, |v| v.encoded_len()));
                    }
                }
                per_rep.push(t.elapsed().as_secs_f64() * 1e3 / qs.len() as f64);
            }
            latency[k] = median(per_rep);
            vo_bytes[k] = mean(&sizes);
        }

        // Index-only insert cost on a fork, so trie and ledger writes do
        // not blur the per-insert trend.
        let last_ts = ds.records[entries - 1].timestamp;
        let probe_meter = Arc::new(GasMeter::default());
        let (index_insert_writes, index_insert_gas) = engine.with_state(|st| {
            let mut fork = st.bhash.fork(Arc::clone(&probe_meter));
            let before = probe_meter.counters();
            fork.insert(st.ledger.next_entry_id(), last_ts + 1).expect("fresh id");
            (probe_meter.counters().since(&before).storage_writes, gas(&probe_meter, &before))
        });

        let meter = engine.meter();
        let probe = NewEntry {
            amount: 1,
            addresses: vec![Address([0x5a; 20])],
            timestamp: last_ts + 1,
            image_cid: None,
            video_cid: None,
            image: None,
            video: None,
        };
        let before = meter.counters();
        let id = engine.insert_batch(vec![probe])?.entry_ids[0];
        let gas_insert = gas(meter, &before);
        let before = meter.counters();
        let new_id = engine.update(id, &EntryChanges { amount: Some(2), ..Default::default() })?.entry_ids[0];
        let gas_update = gas(meter, &before);
        let before = meter.counters();
        engine.delete(new_id)?;
        let gas_delete = gas(meter, &before);

        let roots = engine.roots();
        rows.push(BenchRow {
            n_blocks: scale,
            entries,
            index_variant: opts.variant,
            converted: engine.with_state(|st| st.bhash.is_converted()),
            insert_cpu_ms,
            latency_ms_simple: latency[0],
            latency_ms_time_range: latency[1],
            latency_ms_fuzzy: latency[2],
            vo_bytes_simple: vo_bytes[0],
            vo_bytes_time_range: vo_bytes[1],
            vo_bytes_fuzzy: vo_bytes[2],
            index_insert_writes,
            index_insert_gas,
            gas_insert,
            gas_update,
            gas_delete,
            chain_head: engine.head_digest().to_string(),
            bhash_root: roots.bhash.to_string(),
            trie_root: roots.trie.to_string(),
        });
    }
    Ok(BenchReport { rows })
}

impl BenchReport {
    pub fn write_csv(&self, out: impl Write) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> Result<(), BenchError> {
        for r in &self.rows {
            serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>7} {:>7} {:>10} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>7} {:>9}",
            "blocks", "entries", "insert_ms", "simple_ms", "range_ms", "fuzzy_ms", "range_vo", "fuzzy_vo", "idx_gas", "writes", "converted"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>7} {:>7} {:>10.2} {:>9.4} {:>9.4} {:>9.4} {:>9.1} {:>9.1} {:>9} {:>7} {:>9}",
                r.n_blocks,
                r.entries,
                r.insert_cpu_ms,
                r.latency_ms_simple,
                r.latency_ms_time_range,
                r.latency_ms_fuzzy,
                r.vo_bytes_time_range,
                r.vo_bytes_fuzzy,
                r.index_insert_gas,
                r.index_insert_writes,
                r.converted
            );
        }
        s
    }
}

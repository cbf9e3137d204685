//! Result cache keyed by query fingerprint.
//!
//! A fingerprint is the SHA-256 of the canonical query encoding followed by
//! the epoch, so a query issued after a mutation never matches an entry
//! admitted before it. The Bloom filter screens probes before the map is
//! consulted; it is never cleared, so it keeps the no-false-negative
//! property across epochs while the map drops everything on a bump.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use hybridq_core::bloom::BloomFilter;
use hybridq_core::sql::QueryAst;
use hybridq_core::{sha256, Digest, Encode, Epoch};

use crate::result::ResultSet;

pub fn fingerprint(ast: &QueryAst, epoch: Epoch) -> Digest {
    let mut bytes = ast.to_canonical_bytes();
    bytes.extend_from_slice(&epoch.0.to_be_bytes());
    sha256(&bytes)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    /// Probes the Bloom filter passed but the map could not serve.
    pub filter_false_positives: u64,
}

#[derive(Debug, Default)]
struct Inner {
    bloom: BloomFilter,
    results: HashMap<Digest, (Arc<ResultSet>, Epoch)>,
    epoch: Epoch,
    stats: CacheStats,
}

#[derive(Debug, Default)]
pub struct QueryCache {
    inner: Mutex<Inner>,
}

impl QueryCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_filter(bloom: BloomFilter) -> Self {
        QueryCache { inner: Mutex::new(Inner { bloom, ..Default::default() }) }
    }

    pub fn epoch(&self) -> Epoch {
        self.lock().epoch
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().expect("cache lock")
    }

    /// Whether the filter reports `fp` as possibly admitted.
    pub fn may_contain(&self, fp: &Digest) -> bool {
        self.lock().bloom.contains(fp)
    }

    pub fn lookup(&self, fp: &Digest) -> Option<Arc<ResultSet>> {
        let mut g = self.lock();
        if !g.bloom.contains(fp) {
            g.stats.misses += 1;
            return None;
        }
        let current = g.epoch;
        match g.results.get(fp) {
            Some((rs, e)) if *e == current => {
                let rs = Arc::clone(rs);
                g.stats.hits += 1;
                Some(rs)
            }
            _ => {
                g.stats.misses += 1;
                g.stats.filter_false_positives += 1;
                None
            }
        }
    }

    /// Admits a result computed at `epoch`. Results from an epoch that has
    /// already been superseded are dropped.
    pub fn admit(&self, fp: Digest, result: Arc<ResultSet>, epoch: Epoch) {
        let mut g = self.lock();
        g.bloom.insert(&fp);
        if epoch == g.epoch {
            g.results.insert(fp, (result, epoch));
        }
    }

    /// Moves to `epoch`, invalidating every cached result.
    pub fn advance(&self, epoch: Epoch) {
        let mut g = self.lock();
        assert!(epoch > g.epoch, "cache epochs must increase");
        g.epoch = epoch;
        g.results.clear();
    }

    pub fn len(&self) -> usize {
        self.lock().results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> CacheStats {
        self.lock().stats
    }
}

//! The query engine.
//!
//! Mutations append one block each, update both indexes and anchor the new
//! roots in that block. Selects probe the cache, query an index, check the
//! proof against the roots anchored at the chain head, and resolve payloads
//! from the content store. Updates and deletes never rewrite history: an
//! update appends a new version and a supersession record, a delete appends
//! a tombstone, and selects leave out every superseded entry.

use std::collections::HashMap;
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use hybridq_core::bhash::{verify_range, BHashConfig, BHashTree};
use hybridq_core::gas::{CostTable, GasMeter};
use hybridq_core::ledger::{AnchoredRoots, Block, Ledger, LedgerError, Supersession};
use hybridq_core::plan::{plan_with, ExecutionPlan, StepCosts};
use hybridq_core::sql::{parse, EntryChanges, FuzzyField, NewEntry, QueryAst, SimplePredicate, SqlError};
use hybridq_core::trie::{verify_prefix, Trie};
use hybridq_core::types::{timestamp_string, EntryError};
use hybridq_core::{Address, ContentId, DataEntry, EntryId, Epoch};
use rayon::prelude::*;
use thiserror::Error;

use crate::cache::{fingerprint, QueryCache};
use crate::result::{QueryVo, ResultSet, Row};
use crate::store::{ContentStore, StoreError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Parse(#[from] SqlError),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("payload {0} failed its integrity check")]
    PayloadIntegrityFailure(ContentId),
    #[error("payload {0} is not in the content store")]
    PayloadMissing(ContentId),
    #[error("declared cid {declared} does not match payload cid {actual}")]
    CidMismatch { declared: ContentId, actual: ContentId },
    #[error("entry {0} not found")]
    NotFound(EntryId),
    #[error("invalid entry: {0}")]
    InvalidEntry(#[from] EntryError),
    #[error(transparent)]
    Store(StoreError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("replayed index roots differ from the roots anchored at height {0}")]
    ReplayMismatch(u64),
}

impl From<StoreError> for EngineError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::IntegrityFailure(c) => EngineError::PayloadIntegrityFailure(c),
            StoreError::NotFound(c) => EngineError::PayloadMissing(c),
            e => EngineError::Store(e),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EngineConfig {
    pub bhash: BHashConfig,
    pub costs: CostTable,
    pub step_costs: StepCosts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MutationKind {
    Insert,
    Update,
    Delete,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MutationReceipt {
    pub kind: MutationKind,
    /// Ids assigned by this mutation: the inserted entries or the new
    /// version. Empty for deletes.
    pub entry_ids: Vec<EntryId>,
    pub height: u64,
    pub epoch: Epoch,
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Rows { result: Arc<ResultSet>, cache_hit: bool },
    Mutation(MutationReceipt),
}

/// Trie key of a timestamp string.
pub fn timestamp_key(ts: u64) -> String {
    format!(":{}", timestamp_string(ts))
}

/// Trie key of an address.
pub fn address_key(a: &Address) -> String {
    format!("-{}", a.hex_digits())
}

fn fuzzy_key(field: FuzzyField, prefix: &str) -> String {
    match field {
        FuzzyField::TimestampString => format!(":{prefix}"),
        FuzzyField::Address => format!("-{prefix}"),
    }
}

/// Cids and field values of an entry whose payloads are already stored.
struct Prepared {
    amount: u128,
    addresses: Vec<Address>,
    timestamp: u64,
    image_cid: Option<ContentId>,
    video_cid: Option<ContentId>,
}

pub struct IndexState {
    pub ledger: Ledger,
    pub bhash: BHashTree,
    pub trie: Trie,
    /// Entry id to `(block height, position in block)`.
    locations: Vec<(usize, usize)>,
    /// Superseded entry to its replacement (`None` for deletes).
    superseded: HashMap<EntryId, Option<EntryId>>,
    epoch: Epoch,
}

impl IndexState {
    fn roots(&self) -> AnchoredRoots {
        AnchoredRoots { bhash: self.bhash.root_digest(), trie: self.trie.root_digest() }
    }

    fn entry(&self, id: EntryId) -> Option<&DataEntry> {
        let &(h, i) = self.locations.get(usize::try_from(id).ok()?)?;
        self.ledger.blocks().get(h).map(|b| &b.entries[i])
    }

    fn is_live(&self, id: EntryId) -> bool {
        (id as usize) < self.locations.len() && !self.superseded.contains_key(&id)
    }

    fn index_entry(&mut self, e: &DataEntry) {
        self.bhash.insert(e.entry_id, e.timestamp).expect("fresh entry ids are unique");
        self.trie.insert(&timestamp_key(e.timestamp), e.entry_id).expect("timestamp keys use the trie alphabet");
        for a in &e.addresses {
            self.trie.insert(&address_key(a), e.entry_id).expect("address keys use the trie alphabet");
        }
    }

    fn record_block(&mut self, block: &Block) {
        let h = block.height as usize;
        self.locations.extend((0..block.entries.len()).map(|i| (h, i)));
        for s in &block.supersessions {
            self.superseded.insert(s.target, s.replacement);
        }
    }
}

pub struct Engine {
    config: EngineConfig,
    state: RwLock<IndexState>,
    cache: QueryCache,
    store: Arc<dyn ContentStore>,
    meter: Arc<GasMeter>,
}

impl Engine {
    /// A fresh engine whose chain holds only the genesis block.
    pub fn new(config: EngineConfig, store: Arc<dyn ContentStore>) -> Self {
        let meter = Arc::new(GasMeter::new(config.costs));
        let mut st = IndexState {
            ledger: Ledger::with_meter(Arc::clone(&meter)),
            bhash: BHashTree::with_meter(config.bhash, Arc::clone(&meter)),
            trie: Trie::with_meter(Arc::clone(&meter)),
            locations: Vec::new(),
            superseded: HashMap::new(),
            epoch: Epoch::default(),
        };
        let roots = st.roots();
        st.ledger.append_block(Vec::new(), roots).expect("genesis block is valid");
        Engine { config, state: RwLock::new(st), cache: QueryCache::new(), store, meter }
    }

    /// Rebuilds the indexes by replaying `blocks`, checking after every
    /// block that the replayed roots equal the anchored ones.
    pub fn from_blocks(config: EngineConfig, store: Arc<dyn ContentStore>, blocks: Vec<Block>) -> Result<Self, EngineError> {
        let meter = Arc::new(GasMeter::new(config.costs));
        let ledger = Ledger::from_blocks(blocks, Arc::clone(&meter))?;
        let mut st = IndexState {
            ledger: Ledger::new(),
            bhash: BHashTree::with_meter(config.bhash, Arc::clone(&meter)),
            trie: Trie::with_meter(Arc::clone(&meter)),
            locations: Vec::new(),
            superseded: HashMap::new(),
            epoch: Epoch::default(),
        };
        if ledger.blocks().is_empty() {
            return Err(EngineError::Ledger(LedgerError::UnknownHeight(0)));
        }
        for b in ledger.blocks() {
            for e in &b.entries {
                st.index_entry(e);
            }
            st.record_block(b);
            if st.roots() != b.anchored_roots {
                return Err(EngineError::ReplayMismatch(b.height));
            }
        }
        st.epoch = Epoch(ledger.blocks().len() as u64 - 1);
        st.ledger = ledger;
        let cache = QueryCache::new();
        if st.epoch > Epoch::default() {
            cache.advance(st.epoch);
        }
        Ok(Engine { config, state: RwLock::new(st), cache, store, meter })
    }

    pub fn config(&self) -> EngineConfig {
        self.config
    }

    pub fn meter(&self) -> &Arc<GasMeter> {
        &self.meter
    }

    pub fn cache(&self) -> &QueryCache {
        &self.cache
    }

    pub fn store(&self) -> &Arc<dyn ContentStore> {
        &self.store
    }

    fn read(&self) -> RwLockReadGuard<'_, IndexState> {
        self.state.read().expect("engine lock")
    }

    fn write(&self) -> RwLockWriteGuard<'_, IndexState> {
        self.state.write().expect("engine lock")
    }

    /// Read access to the ledger and indexes.
    pub fn with_state<R>(&self, f: impl FnOnce(&IndexState) -> R) -> R {
        f(&self.read())
    }

    /// Mutates the indexes without anchoring. Fault-injection hook: the
    /// next select touching the altered index must fail verification.
    pub fn tamper_index(&self, f: impl FnOnce(&mut BHashTree, &mut Trie)) {
        let mut st = self.write();
        let st = &mut *st;
        f(&mut st.bhash, &mut st.trie);
    }

    pub fn epoch(&self) -> Epoch {
        self.read().epoch
    }

    pub fn head_height(&self) -> u64 {
        self.read().ledger.head().expect("genesis exists").height
    }

    pub fn head_digest(&self) -> hybridq_core::Digest {
        self.read().ledger.head().expect("genesis exists").block_digest
    }

    pub fn roots(&self) -> AnchoredRoots {
        self.read().roots()
    }

    pub fn blocks(&self) -> Vec<Block> {
        self.read().ledger.blocks().to_vec()
    }

    pub fn is_live(&self, id: EntryId) -> bool {
        self.read().is_live(id)
    }

    pub fn explain(&self, ast: &QueryAst) -> ExecutionPlan {
        plan_with(ast, &self.config.step_costs)
    }

    pub fn execute_sql(&self, sql: &str) -> Result<Outcome, EngineError> {
        self.execute(&parse(sql)?)
    }

    pub fn execute(&self, ast: &QueryAst) -> Result<Outcome, EngineError> {
        self.meter.compute(self.explain(ast).est_cost);
        match ast {
            QueryAst::Insert(e) => self.insert_batch(vec![e.clone()]).map(Outcome::Mutation),
            QueryAst::Update { entry_id, changes } => self.update(*entry_id, changes).map(Outcome::Mutation),
            QueryAst::Delete { entry_id } => self.delete(*entry_id).map(Outcome::Mutation),
            _ => {
                let epoch = self.cache.epoch();
                if let Some(result) = self.cache.lookup(&fingerprint(ast, epoch)) {
                    return Ok(Outcome::Rows { result, cache_hit: true });
                }
                let (result, epoch) = self.select_at(ast)?;
                let result = Arc::new(result);
                self.cache.admit(fingerprint(ast, epoch), Arc::clone(&result), epoch);
                Ok(Outcome::Rows { result, cache_hit: false })
            }
        }
    }

    /// Runs a select against the indexes, bypassing the cache.
    pub fn select_uncached(&self, ast: &QueryAst) -> Result<ResultSet, EngineError> {
        self.select_at(ast).map(|(r, _)| r)
    }

    fn select_at(&self, ast: &QueryAst) -> Result<(ResultSet, Epoch), EngineError> {
        let (entries, vo, height, epoch) = {
            let st = self.read();
            let head = st.ledger.head().expect("genesis exists").height;
            let roots = st.ledger.trusted_root(head)?;
            let (ids, vo) = match ast {
                QueryAst::SelectSimple(SimplePredicate::EntryId(id)) => {
                    if !st.is_live(*id) {
                        return Err(EngineError::NotFound(*id));
                    }
                    let (h, _) = st.locations[*id as usize];
                    let block = &st.ledger.blocks()[h];
                    if block.compute_digest() != block.block_digest {
                        return Err(EngineError::VerificationFailed(format!("block {h} digest mismatch")));
                    }
                    (vec![*id], None)
                }
                QueryAst::SelectSimple(SimplePredicate::TimestampEq(t)) => range(&st, &roots, *t, *t)?,
                QueryAst::SelectTimeRange { start, end } => range(&st, &roots, *start, *end)?,
                QueryAst::SelectFuzzy { field, prefix } => {
                    let key = fuzzy_key(*field, prefix);
                    let (ids, vo) = st.trie.prefix_query(&key);
                    if !verify_prefix(&vo, &roots.trie, &key, &ids) {
                        return Err(EngineError::VerificationFailed("prefix proof does not match the anchored trie root".into()));
                    }
                    (ids, Some(QueryVo::Prefix(vo)))
                }
                _ => unreachable!("mutations are handled by execute"),
            };
            let mut entries = Vec::with_capacity(ids.len());
            for id in ids {
                if st.is_live(id) {
                    let e = st.entry(id).ok_or_else(|| {
                        EngineError::VerificationFailed(format!("index returned unknown entry {id}"))
                    })?;
                    entries.push(e.clone());
                }
            }
            self.meter.read(entries.len() as u64);
            (entries, vo, head, st.epoch)
        };
        let mut rows: Vec<Row> = entries
            .into_par_iter()
            .map(|entry| {
                let image = entry.image_cid.map(|c| self.store.get(&c)).transpose()?;
                let video = entry.video_cid.map(|c| self.store.get(&c)).transpose()?;
                Ok(Row { entry, image, video })
            })
            .collect::<Result<_, EngineError>>()?;
        rows.sort_by_key(|r| r.entry.entry_id);
        rows.dedup_by_key(|r| r.entry.entry_id);
        Ok((ResultSet { rows, vo, anchor_height: height }, epoch))
    }

    fn store_payload(&self, bytes: &Option<Vec<u8>>, declared: Option<ContentId>) -> Result<Option<ContentId>, EngineError> {
        match (bytes, declared) {
            (Some(b), d) => {
                let actual = self.store.put(b)?;
                match d {
                    Some(declared) if declared != actual => Err(EngineError::CidMismatch { declared, actual }),
                    _ => Ok(Some(actual)),
                }
            }
            (None, Some(c)) if !self.store.contains(&c) => Err(EngineError::PayloadMissing(c)),
            (None, d) => Ok(d),
        }
    }

    fn prepare(&self, e: &NewEntry) -> Result<Prepared, EngineError> {
        Ok(Prepared {
            amount: e.amount,
            addresses: e.addresses.clone(),
            timestamp: e.timestamp,
            image_cid: self.store_payload(&e.image, e.image_cid)?,
            video_cid: self.store_payload(&e.video, e.video_cid)?,
        })
    }

    /// Bumps the epoch and invalidates the cache. Called with the write
    /// lock held so readers see either the old or the new state.
    fn advance(&self, st: &mut IndexState) -> Epoch {
        st.epoch = st.epoch.next();
        self.cache.advance(st.epoch);
        st.epoch
    }

    /// Appends `items` as one block.
    pub fn insert_batch(&self, items: Vec<NewEntry>) -> Result<MutationReceipt, EngineError> {
        let prepared: Vec<Prepared> = items.iter().map(|e| self.prepare(e)).collect::<Result<_, _>>()?;
        let mut st = self.write();
        let base = st.ledger.next_entry_id();
        let entries: Vec<DataEntry> = prepared
            .into_iter()
            .enumerate()
            .map(|(i, p)| DataEntry {
                entry_id: base + i as u64,
                amount: p.amount,
                addresses: p.addresses,
                timestamp: p.timestamp,
                image_cid: p.image_cid,
                video_cid: p.video_cid,
            })
            .collect();
        for e in &entries {
            e.validate()?;
        }
        for e in &entries {
            st.index_entry(e);
        }
        let ids = entries.iter().map(|e| e.entry_id).collect();
        let roots = st.roots();
        let block = st.ledger.append_block(entries, roots)?.clone();
        st.record_block(&block);
        let epoch = self.advance(&mut st);
        Ok(MutationReceipt { kind: MutationKind::Insert, entry_ids: ids, height: block.height, epoch })
    }

    pub fn update(&self, target: EntryId, changes: &EntryChanges) -> Result<MutationReceipt, EngineError> {
        let image = self.store_payload(&changes.image, changes.image_cid.flatten())?;
        let video = self.store_payload(&changes.video, changes.video_cid.flatten())?;
        let mut st = self.write();
        if !st.is_live(target) {
            return Err(EngineError::NotFound(target));
        }
        let old = st.entry(target).expect("live entries exist").clone();
        let pick = |payload: &Option<Vec<u8>>, cid: Option<Option<ContentId>>, stored, old| {
            if payload.is_some() {
                stored
            } else {
                cid.unwrap_or(old)
            }
        };
        let new = DataEntry {
            entry_id: st.ledger.next_entry_id(),
            amount: changes.amount.unwrap_or(old.amount),
            addresses: changes.addresses.clone().unwrap_or(old.addresses),
            timestamp: changes.timestamp.unwrap_or(old.timestamp),
            image_cid: pick(&changes.image, changes.image_cid, image, old.image_cid),
            video_cid: pick(&changes.video, changes.video_cid, video, old.video_cid),
        };
        new.validate()?;
        st.index_entry(&new);
        let id = new.entry_id;
        let roots = st.roots();
        let sup = vec![Supersession { target, replacement: Some(id) }];
        let block = st.ledger.append_block_with(vec![new], sup, roots)?.clone();
        st.record_block(&block);
        let epoch = self.advance(&mut st);
        Ok(MutationReceipt { kind: MutationKind::Update, entry_ids: vec![id], height: block.height, epoch })
    }

    pub fn delete(&self, target: EntryId) -> Result<MutationReceipt, EngineError> {
        let mut st = self.write();
        if !st.is_live(target) {
            return Err(EngineError::NotFound(target));
        }
        let roots = st.roots();
        let sup = vec![Supersession { target, replacement: None }];
        let block = st.ledger.append_block_with(Vec::new(), sup, roots)?.clone();
        st.record_block(&block);
        let epoch = self.advance(&mut st);
        Ok(MutationReceipt { kind: MutationKind::Delete, entry_ids: Vec::new(), height: block.height, epoch })
    }
}

fn range(
    st: &IndexState,
    roots: &AnchoredRoots,
    start: u64,
    end: u64,
) -> Result<(Vec<EntryId>, Option<QueryVo>), EngineError> {
    let (ids, vo) = st.bhash.range_query(start, end);
    if !verify_range(&vo, &roots.bhash, start, end, &ids) {
        return Err(EngineError::VerificationFailed("range proof does not match the anchored index root".into()));
    }
    Ok((ids, Some(QueryVo::Range(vo))))
}

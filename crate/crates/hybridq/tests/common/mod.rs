//! Naive replay oracle and mixed-workload driver shared by the engine
//! integration tests and the acceptance target.

#![allow(dead_code)]

use std::collections::HashSet;

use hybridq::{Engine, EngineError, Outcome, QueryVo, ResultSet};
use hybridq_core::bhash::verify_range;
use hybridq_core::sql::{EntryChanges, FuzzyField, NewEntry, QueryAst, SimplePredicate};
use hybridq_core::trie::verify_prefix;
use hybridq_core::types::timestamp_string;
use hybridq_core::{Address, ContentId, DataEntry, EntryId};
use rand::{Rng, RngCore};

/// Applies mutations in order and answers selects by filtering.
#[derive(Default)]
pub struct Oracle {
    pub entries: Vec<DataEntry>,
    pub dead: HashSet<EntryId>,
}

impl Oracle {
    fn push(&mut self, e: &NewEntry) -> EntryId {
        let id = self.entries.len() as EntryId;
        let cid = |b: &Option<Vec<u8>>, c: Option<ContentId>| b.as_deref().map(ContentId::of).or(c);
        self.entries.push(DataEntry {
            entry_id: id,
            amount: e.amount,
            addresses: e.addresses.clone(),
            timestamp: e.timestamp,
            image_cid: cid(&e.image, e.image_cid),
            video_cid: cid(&e.video, e.video_cid),
        });
        id
    }

    pub fn live(&self) -> impl Iterator<Item = &DataEntry> {
        self.entries.iter().filter(|e| !self.dead.contains(&e.entry_id))
    }

    pub fn live_ids(&self) -> Vec<EntryId> {
        self.live().map(|e| e.entry_id).collect()
    }

    /// Ids the select must return, or `None` if it must fail with NotFound.
    pub fn select(&self, q: &QueryAst) -> Option<Vec<EntryId>> {
        let ids = |f: &dyn Fn(&DataEntry) -> bool| Some(self.live().filter(|e| f(e)).map(|e| e.entry_id).collect());
        match q {
            QueryAst::SelectSimple(SimplePredicate::EntryId(id)) => {
                (*id < self.entries.len() as u64 && !self.dead.contains(id)).then(|| vec![*id])
            }
            QueryAst::SelectSimple(SimplePredicate::TimestampEq(t)) => ids(&|e| e.timestamp == *t),
            QueryAst::SelectTimeRange { start, end } => ids(&|e| (*start..=*end).contains(&e.timestamp)),
            QueryAst::SelectFuzzy { field: FuzzyField::TimestampString, prefix } => {
                ids(&|e| timestamp_string(e.timestamp).starts_with(prefix.as_str()))
            }
            QueryAst::SelectFuzzy { field: FuzzyField::Address, prefix } => {
                ids(&|e| e.addresses.iter().any(|a| a.hex_digits().starts_with(prefix.as_str())))
            }
            _ => unreachable!("not a select"),
        }
    }

    pub fn apply(&mut self, q: &QueryAst) {
        match q {
            QueryAst::Insert(e) => {
                self.push(e);
            }
            QueryAst::Delete { entry_id } => {
                self.dead.insert(*entry_id);
            }
            QueryAst::Update { entry_id, changes } => {
                let old = self.entries[*entry_id as usize].clone();
                let image_cid = match (&changes.image, changes.image_cid) {
                    (Some(b), _) => Some(ContentId::of(b)),
                    (None, Some(c)) => c,
                    (None, None) => old.image_cid,
                };
                let video_cid = match (&changes.video, changes.video_cid) {
                    (Some(b), _) => Some(ContentId::of(b)),
                    (None, Some(c)) => c,
                    (None, None) => old.video_cid,
                };
                let e = NewEntry {
                    amount: changes.amount.unwrap_or(old.amount),
                    addresses: changes.addresses.clone().unwrap_or(old.addresses),
                    timestamp: changes.timestamp.unwrap_or(old.timestamp),
                    image_cid,
                    video_cid,
                    image: None,
                    video: None,
                };
                self.push(&e);
                self.dead.insert(*entry_id);
            }
            _ => unreachable!("not a mutation"),
        }
    }
}

pub const T0: u64 = 1_700_000_000;

pub struct Workload {
    pub pool: Vec<Address>,
}

impl Workload {
    pub fn new(rng: &mut impl Rng) -> Self {
        Workload { pool: (0..12).map(|_| Address(rng.random())).collect() }
    }

    fn addresses(&self, rng: &mut impl Rng) -> Vec<Address> {
        let n = rng.random_range(1..=3);
        (0..n).map(|_| self.pool[rng.random_range(0..self.pool.len())]).collect()
    }

    fn payload(rng: &mut impl Rng, p: f64) -> Option<Vec<u8>> {
        rng.random_bool(p).then(|| {
            let mut b = vec![0u8; rng.random_range(0..300)];
            rng.fill_bytes(&mut b);
            b
        })
    }

    pub fn insert(&self, rng: &mut impl Rng) -> QueryAst {
        QueryAst::Insert(NewEntry {
            amount: rng.random_range(0..1_000_000),
            addresses: self.addresses(rng),
            timestamp: T0 + rng.random_range(0..200_000),
            image_cid: None,
            video_cid: None,
            image: Self::payload(rng, 0.3),
            video: Self::payload(rng, 0.1),
        })
    }

    pub fn select(&self, rng: &mut impl Rng, oracle: &Oracle) -> QueryAst {
        let n = oracle.entries.len() as u64;
        let some_ts = |rng: &mut dyn RngCore| match n {
            0 => T0,
            _ => oracle.entries[rng.random_range(0..n) as usize].timestamp,
        };
        match rng.random_range(0..5) {
            0 => QueryAst::SelectSimple(SimplePredicate::EntryId(rng.random_range(0..n + 2))),
            1 => QueryAst::SelectSimple(SimplePredicate::TimestampEq(some_ts(rng))),
            2 => {
                let a = T0 + rng.random_range(0..210_000);
                let b = a + rng.random_range(0..50_000);
                QueryAst::SelectTimeRange { start: a - 5_000, end: b }
            }
            3 => {
                let s = timestamp_string(some_ts(rng));
                let len = rng.random_range(1..=s.len());
                QueryAst::SelectFuzzy { field: FuzzyField::TimestampString, prefix: s[..len].to_string() }
            }
            _ => {
                let s = self.pool[rng.random_range(0..self.pool.len())].hex_digits();
                let len = rng.random_range(1..=4);
                QueryAst::SelectFuzzy { field: FuzzyField::Address, prefix: s[..len].to_string() }
            }
        }
    }

    /// 70% select, 20% insert, 5% update, 5% delete. Updates and deletes
    /// fall back to inserts while nothing is live.
    pub fn op(&self, rng: &mut impl Rng, oracle: &Oracle) -> QueryAst {
        let roll = rng.random_range(0..100);
        let live = oracle.live_ids();
        if roll < 70 {
            return self.select(rng, oracle);
        }
        if roll < 90 || live.is_empty() {
            return self.insert(rng);
        }
        let target = live[rng.random_range(0..live.len())];
        if roll < 95 {
            let mut changes = EntryChanges::default();
            match rng.random_range(0..3) {
                0 => changes.amount = Some(rng.random_range(0..1000)),
                1 => changes.timestamp = Some(T0 + rng.random_range(0..200_000)),
                _ => {
                    changes.addresses = Some(self.addresses(rng));
                    changes.image = Self::payload(rng, 1.0);
                }
            }
            QueryAst::Update { entry_id: target, changes }
        } else {
            QueryAst::Delete { entry_id: target }
        }
    }
}

/// Re-verifies a result independently of the engine: the VO against the
/// root anchored at the result's height, and every payload against its cid.
pub fn check_result(engine: &Engine, q: &QueryAst, rs: &ResultSet) -> Result<(), String> {
    let root = engine
        .with_state(|st| st.ledger.trusted_root(rs.anchor_height))
        .map_err(|e| format!("no anchor: {e}"))?;
    let ids = rs.entry_ids();
    let range_ids = |vo: &hybridq_core::bhash::RangeVo| -> Vec<EntryId> {
        vo.in_range_entries().into_iter().map(|(_, id)| id).collect()
    };
    let proven: Option<Vec<EntryId>> = match (q, &rs.vo) {
        (QueryAst::SelectSimple(SimplePredicate::EntryId(id)), None) => Some(vec![*id]),
        (QueryAst::SelectSimple(SimplePredicate::TimestampEq(t)), Some(QueryVo::Range(vo))) => {
            let p = range_ids(vo);
            verify_range(vo, &root.bhash, *t, *t, &p).then_some(p)
        }
        (QueryAst::SelectTimeRange { start, end }, Some(QueryVo::Range(vo))) => {
            let p = range_ids(vo);
            verify_range(vo, &root.bhash, *start, *end, &p).then_some(p)
        }
        (QueryAst::SelectFuzzy { field, prefix }, Some(QueryVo::Prefix(vo))) => {
            let key = match field {
                FuzzyField::TimestampString => format!(":{prefix}"),
                FuzzyField::Address => format!("-{prefix}"),
            };
            let p = vo.result_ids();
            verify_prefix(vo, &root.trie, &key, &p).then_some(p)
        }
        _ => None,
    };
    let Some(proven) = proven else {
        return Err("VO failed independent verification".into());
    };
    let proven: HashSet<EntryId> = proven.into_iter().collect();
    if let Some(id) = ids.iter().find(|id| !proven.contains(id)) {
        return Err(format!("row {id} is not covered by the VO"));
    }
    if ids.windows(2).any(|w| w[0] >= w[1]) {
        return Err("rows not strictly sorted by entry_id".into());
    }
    for r in &rs.rows {
        for (bytes, cid) in [(&r.image, r.entry.image_cid), (&r.video, r.entry.video_cid)] {
            match (bytes, cid) {
                (Some(b), Some(c)) if ContentId::of(b) == c => {}
                (None, None) => {}
                _ => return Err(format!("payload mismatch for entry {}", r.entry.entry_id)),
            }
        }
    }
    Ok(())
}

/// Runs `n` mixed operations against `engine`, comparing every select with
/// the oracle. Returns the number of selects checked.
pub fn run_mixed(engine: &Engine, rng: &mut impl Rng, n: usize) -> Result<usize, String> {
    let wl = Workload::new(rng);
    let mut oracle = Oracle::default();
    let mut selects = 0;
    for i in 0..n {
        let q = wl.op(rng, &oracle);
        if q.is_select() {
            selects += 1;
            let want = oracle.select(&q);
            match (engine.execute(&q), want) {
                (Ok(Outcome::Rows { result, .. }), Some(want)) => {
                    check_result(engine, &q, &result).map_err(|e| format!("op {i} {q:?}: {e}"))?;
                    if result.entry_ids() != want {
                        return Err(format!("op {i} {q:?}: got {:?}, oracle {want:?}", result.entry_ids()));
                    }
                }
                (Err(EngineError::NotFound(_)), None) => {}
                (got, want) => return Err(format!("op {i} {q:?}: got {got:?}, oracle {want:?}")),
            }
        } else {
            engine.execute(&q).map_err(|e| format!("op {i} {q:?}: {e}"))?;
            oracle.apply(&q);
        }
    }
    Ok(selects)
}

//! Query planning.
//!
//! With one table and no joins there is no order space to search: each
//! statement shape has exactly one valid step sequence, and the planner's
//! job is to pick the index and price the steps.

use alloc::vec::Vec;
use core::fmt;

use crate::sql::{QueryAst, SimplePredicate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IndexKind {
    /// Point read of an entry by id straight from the ledger.
    Ledger,
    BHash,
    Trie,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PlanStep {
    CacheProbe,
    IndexLookup(IndexKind),
    OffChainFetch,
    Merge,
    VoAttach,
    OffChainPut,
    LedgerAppend,
    IndexInsert(IndexKind),
    Anchor,
}

impl fmt::Display for PlanStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PlanStep::CacheProbe => "cache-probe",
            PlanStep::IndexLookup(IndexKind::Ledger) => "index-lookup(ledger)",
            PlanStep::IndexLookup(IndexKind::BHash) => "index-lookup(bhash)",
            PlanStep::IndexLookup(IndexKind::Trie) => "index-lookup(trie)",
            PlanStep::OffChainFetch => "off-chain-fetch",
            PlanStep::Merge => "merge",
            PlanStep::VoAttach => "vo-attach",
            PlanStep::OffChainPut => "off-chain-put",
            PlanStep::LedgerAppend => "ledger-append",
            PlanStep::IndexInsert(IndexKind::Ledger) => "index-insert(ledger)",
            PlanStep::IndexInsert(IndexKind::BHash) => "index-insert(bhash)",
            PlanStep::IndexInsert(IndexKind::Trie) => "index-insert(trie)",
            PlanStep::Anchor => "anchor",
        };
        f.write_str(s)
    }
}

/// Compute units charged per plan step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepCosts {
    pub cache_probe: u64,
    pub index_lookup: u64,
    pub off_chain_fetch: u64,
    pub merge: u64,
    pub ledger_append: u64,
    pub vo_attach: u64,
    pub index_insert: u64,
    pub anchor: u64,
    pub off_chain_put: u64,
}

impl Default for StepCosts {
    fn default() -> Self {
        StepCosts {
            cache_probe: 1,
            index_lookup: 50,
            off_chain_fetch: 500,
            merge: 5,
            ledger_append: 100,
            vo_attach: 10,
            index_insert: 50,
            anchor: 20,
            off_chain_put: 500,
        }
    }
}

impl StepCosts {
    pub fn of(&self, step: PlanStep) -> u64 {
        match step {
            PlanStep::CacheProbe => self.cache_probe,
            PlanStep::IndexLookup(_) => self.index_lookup,
            PlanStep::OffChainFetch => self.off_chain_fetch,
            PlanStep::Merge => self.merge,
            PlanStep::VoAttach => self.vo_attach,
            PlanStep::OffChainPut => self.off_chain_put,
            PlanStep::LedgerAppend => self.ledger_append,
            PlanStep::IndexInsert(_) => self.index_insert,
            PlanStep::Anchor => self.anchor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionPlan {
    pub steps: Vec<PlanStep>,
    pub est_cost: u64,
}

impl fmt::Display for ExecutionPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(" -> ")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, " (cost {})", self.est_cost)
    }
}

pub fn plan(ast: &QueryAst) -> ExecutionPlan {
    plan_with(ast, &StepCosts::default())
}

pub fn plan_with(ast: &QueryAst, costs: &StepCosts) -> ExecutionPlan {
    use PlanStep::*;
    let select = |index| alloc::vec![CacheProbe, IndexLookup(index), OffChainFetch, Merge, VoAttach];
    let steps = match ast {
        QueryAst::SelectSimple(SimplePredicate::EntryId(_)) => select(IndexKind::Ledger),
        QueryAst::SelectSimple(SimplePredicate::TimestampEq(_)) | QueryAst::SelectTimeRange { .. } => {
            select(IndexKind::BHash)
        }
        QueryAst::SelectFuzzy { .. } => select(IndexKind::Trie),
        QueryAst::Insert(e) => {
            let mut s = Vec::new();
            if e.image.is_some() || e.video.is_some() {
                s.push(OffChainPut);
            }
            s.extend([LedgerAppend, IndexInsert(IndexKind::BHash), IndexInsert(IndexKind::Trie), Anchor]);
            s
        }
        QueryAst::Update { changes, .. } => {
            let mut s = Vec::new();
            if changes.image.is_some() || changes.video.is_some() {
                s.push(OffChainPut);
            }
            s.extend([LedgerAppend, IndexInsert(IndexKind::BHash), IndexInsert(IndexKind::Trie), Anchor]);
            s
        }
        QueryAst::Delete { .. } => alloc::vec![LedgerAppend, Anchor],
    };
    let est_cost = steps.iter().map(|s| costs.of(*s)).sum();
    ExecutionPlan { steps, est_cost }
}

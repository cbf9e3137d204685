//! Synthetic gas metering.
//!
//! Index structures and the ledger record every storage-slot read and write
//! and every hash compression into a shared [`GasMeter`]. Counters are
//! atomics so readers can meter through `&self`.

use alloc::string::String;
use core::sync::atomic::{AtomicU64, Ordering};

/// Price of one unit of each counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostTable {
    pub write_cost: u64,
    pub read_cost: u64,
    pub compute_cost: u64,
}

impl Default for CostTable {
    /// Relative magnitudes of EVM storage pricing (SSTORE ≫ SLOAD ≫ ALU).
    fn default() -> Self {
        CostTable { write_cost: 20_000, read_cost: 800, compute_cost: 1 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GasCounters {
    pub storage_writes: u64,
    pub storage_reads: u64,
    pub compute_units: u64,
}

impl GasCounters {
    /// Counter deltas since `earlier`.
    pub fn since(&self, earlier: &GasCounters) -> GasCounters {
        GasCounters {
            storage_writes: self.storage_writes - earlier.storage_writes,
            storage_reads: self.storage_reads - earlier.storage_reads,
            compute_units: self.compute_units - earlier.compute_units,
        }
    }

    pub fn total_gas(&self, costs: &CostTable) -> u64 {
        self.storage_writes * costs.write_cost
            + self.storage_reads * costs.read_cost
            + self.compute_units * costs.compute_cost
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GasReport {
    pub op: String,
    pub counters: GasCounters,
    pub total_gas: u64,
}

#[derive(Debug, Default)]
pub struct GasMeter {
    writes: AtomicU64,
    reads: AtomicU64,
    compute: AtomicU64,
    costs: CostTable,
}

impl GasMeter {
    pub fn new(costs: CostTable) -> Self {
        GasMeter { costs, ..Default::default() }
    }

    pub fn costs(&self) -> CostTable {
        self.costs
    }

    pub fn write(&self, n: u64) {
        self.writes.fetch_add(n, Ordering::Relaxed);
    }

    pub fn read(&self, n: u64) {
        self.reads.fetch_add(n, Ordering::Relaxed);
    }

    pub fn compute(&self, n: u64) {
        self.compute.fetch_add(n, Ordering::Relaxed);
    }

    pub fn counters(&self) -> GasCounters {
        GasCounters {
            storage_writes: self.writes.load(Ordering::Relaxed),
            storage_reads: self.reads.load(Ordering::Relaxed),
            compute_units: self.compute.load(Ordering::Relaxed),
        }
    }

    /// Runs `f` and reports the counters it accumulated.
    ///
    /// Concurrent activity on the same meter is attributed to `f` as well;
    /// meter under exclusive access when exact numbers matter.
    pub fn measure<R>(&self, op: &str, f: impl FnOnce() -> R) -> (R, GasReport) {
        let before = self.counters();
        let r = f();
        (r, self.report_since(op, &before))
    }

    pub fn report_since(&self, op: &str, before: &GasCounters) -> GasReport {
        let counters = self.counters().since(before);
        GasReport { op: String::from(op), counters, total_gas: counters.total_gas(&self.costs) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noop_scope_is_zero() {
        let m = GasMeter::default();
        m.write(3);
        let ((), r) = m.measure("noop", || {});
        assert_eq!(r.counters, GasCounters::default());
        assert_eq!(r.total_gas, 0);
    }

    #[test]
    fn total_is_weighted_sum() {
        let m = GasMeter::new(CostTable::default());
        let ((), r) = m.measure("op", || {
            m.write(2);
            m.read(3);
            m.compute(5);
        });
        assert_eq!(r.total_gas, 2 * 20_000 + 3 * 800 + 5);
    }
}

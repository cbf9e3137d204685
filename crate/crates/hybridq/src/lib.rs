//! Verifiable query middleware over a simulated ledger and a
//! content-addressed payload store.
//!
//! The pure index and ledger logic lives in `hybridq-core`; this crate adds
//! the parts that need `std`: the [`store`], the [`cache`], the query
//! [`engine`], block-log persistence, dataset generation and the benchmark
//! harness behind the `hybridq` binary.

pub mod bench;
pub mod cache;
pub mod dataset;
pub mod engine;
pub mod persist;
pub mod result;
pub mod store;

pub use engine::{Engine, EngineConfig, EngineError, MutationKind, MutationReceipt, Outcome};
pub use result::{QueryVo, ResultSet, Row};
pub use store::{ContentStore, DirStore, MemStore, StoreError};

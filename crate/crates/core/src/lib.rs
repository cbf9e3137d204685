//! Verifiable indexes and query front end for hybrid on/off-chain storage.
//!
//! This crate is `no_std` (it needs `alloc`). It holds everything that is
//! pure computation:
//!
//! - [`types`] and [`codec`]: the domain values and their canonical byte
//!   layout, which is also the wire format of every verification object.
//! - [`digest`]: domain-separated SHA-256.
//! - [`bhash`]: the time-range index, a B+Tree that converts its leaves into
//!   hash nodes once an insertion threshold is reached.
//! - [`trie`]: the prefix index over fixed-alphabet strings.
//! - [`ledger`]: a deterministic append-only block chain that anchors index
//!   roots, plus [`gas`] metering.
//! - [`bloom`], [`sql`] and [`plan`]: the cache filter, parser and planner
//!   used by the middleware.
//!
//! IO, the content store, the execution engine and the CLI live in the
//! `hybridq` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod bhash;
pub mod bloom;
pub mod codec;
pub mod digest;
pub mod gas;
pub mod ledger;
pub mod plan;
pub mod sql;
pub mod trie;
pub mod types;

pub use codec::{canonical_encode, CodecError, Decode, Decoder, Encode, Encoder};
pub use digest::{digest, sha256, DomainTag};
pub use types::{Address, ContentId, DataEntry, Digest, EntryId, Epoch, TimeKey};

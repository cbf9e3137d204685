use std::collections::HashSet;

use hybridq_core::plan::plan;
use hybridq_core::sql::{FuzzyField, QueryAst, SimplePredicate};
use hybridq_core::{canonical_encode, digest, Address, ContentId, DataEntry, Decode, DomainTag, TimeKey};
use proptest::prelude::*;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_entry(rng: &mut impl Rng, id: u64) -> DataEntry {
    let n = rng.random_range(1..4);
    DataEntry {
        entry_id: id,
        amount: rng.random_range(0..10_000),
        addresses: (0..n).map(|_| Address(rng.random())).collect(),
        timestamp: rng.random_range(0..1 << 40),
        image_cid: rng.random_bool(0.5).then(|| ContentId(rng.random())),
        video_cid: rng.random_bool(0.2).then(|| ContentId(rng.random())),
    }
}

#[test]
fn ten_thousand_entries_encode_distinctly() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // Small id and field ranges so structurally close values are common.
    let entries: Vec<DataEntry> = (0..10_000).map(|_| {
        let id = rng.random_range(0..100);
        random_entry(&mut rng, id)
    }).collect();
    let distinct_values: HashSet<&DataEntry> = entries.iter().collect();
    let encodings: HashSet<Vec<u8>> = entries.iter().map(canonical_encode).collect();
    assert_eq!(encodings.len(), distinct_values.len());
    assert_eq!(encodings.len(), 10_000);
    for e in entries.iter().take(500) {
        assert_eq!(DataEntry::from_canonical_bytes(&canonical_encode(e)).unwrap(), *e);
    }
}

#[test]
fn domain_tags_separate_random_payloads() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1_000 {
        let mut p = vec![0u8; rng.random_range(0..200)];
        rng.fill_bytes(&mut p);
        assert_ne!(digest(DomainTag::LeafEntry, &p), digest(DomainTag::InternalNode, &p));
    }
}

#[test]
fn plans_are_deterministic_over_random_asts() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let q = match rng.random_range(0..4) {
            0 => QueryAst::SelectSimple(SimplePredicate::EntryId(rng.random())),
            1 => QueryAst::SelectSimple(SimplePredicate::TimestampEq(rng.random_range(0..1 << 40))),
            2 => QueryAst::SelectTimeRange { start: rng.random_range(0..1000), end: rng.random_range(0..1000) },
            _ => QueryAst::SelectFuzzy { field: FuzzyField::TimestampString, prefix: "20".into() },
        };
        let (a, b) = (plan(&q), plan(&q));
        assert_eq!(a, b);
        assert_eq!(a.est_cost, 566);
    }
}

proptest! {
    #[test]
    fn time_key_order_matches_byte_order(a in 0u64..1 << 63, b in 0u64..1 << 63) {
        let (ka, kb) = (canonical_encode(&TimeKey(a)), canonical_encode(&TimeKey(b)));
        prop_assert_eq!(a.cmp(&b), ka.cmp(&kb));
    }

    #[test]
    fn entry_encoding_is_injective(sa in any::<u64>(), sb in any::<u64>()) {
        let a = random_entry(&mut ChaCha8Rng::seed_from_u64(sa), sa % 4);
        let b = random_entry(&mut ChaCha8Rng::seed_from_u64(sb), sb % 4);
        prop_assert_eq!(a == b, canonical_encode(&a) == canonical_encode(&b));
    }
}

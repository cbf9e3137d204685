use hybridq_core::trie::{verify_prefix, PrefixEnd, PrefixVo, Trie, ALPHABET};
use hybridq_core::{Decode, Encode, EntryId};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_key(rng: &mut impl Rng, len: usize, alphabet: &[u8]) -> String {
    (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())] as char).collect()
}

fn starts_with(keys: &[String], p: &str) -> Vec<EntryId> {
    keys.iter().enumerate().filter(|(_, k)| k.starts_with(p)).map(|(i, _)| i as EntryId).collect()
}

#[test]
fn five_thousand_hex_keys_find_themselves() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut t = Trie::new();
    let keys: Vec<String> = (0..5_000).map(|_| random_key(&mut rng, 12, b"0123456789abcdef")).collect();
    for (i, k) in keys.iter().enumerate() {
        t.insert(k, i as EntryId).unwrap();
    }
    assert!(t.check_digests());
    for (i, k) in keys.iter().enumerate() {
        let (r, vo) = t.prefix_query(k);
        assert_eq!(r, starts_with(&keys, k));
        assert!(r.contains(&(i as EntryId)));
        assert!(verify_prefix(&vo, &t.root_digest(), k, &r));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prefix_queries_match_filter(seed in any::<u64>(), n in 0usize..300, probes in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Small alphabet subset so prefixes collide often.
        let keys: Vec<String> = (0..n).map(|_| {
            let len = rng.random_range(1..10);
            random_key(&mut rng, len, b"01a-:")
        }).collect();
        let mut t = Trie::new();
        for (i, k) in keys.iter().enumerate() {
            t.insert(k, i as EntryId).unwrap();
        }
        prop_assert!(t.check_digests());
        for _ in 0..probes {
            let len = rng.random_range(0..6);
            let p = random_key(&mut rng, len, b"01a-:f");
            let (r, vo) = t.prefix_query(&p);
            prop_assert_eq!(&r, &starts_with(&keys, &p));
            prop_assert!(verify_prefix(&vo, &t.root_digest(), &p, &r));
            let d = t.descend(&p);
            if d.node.is_some() {
                prop_assert_eq!(d.visits, p.len());
            }
        }
    }
}

#[test]
fn descent_visits_equal_prefix_length() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut t = Trie::new();
    let long = random_key(&mut rng, 40, ALPHABET);
    t.insert(&long, 0).unwrap();
    for len in 1..=32 {
        assert_eq!(t.descend(&long[..len]).visits, len);
    }
}

#[test]
fn sibling_fuzz_and_extra_ids_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut t = Trie::new();
    let keys: Vec<String> = (0..300).map(|_| random_key(&mut rng, 6, b"0123ab")).collect();
    for (i, k) in keys.iter().enumerate() {
        t.insert(k, i as EntryId).unwrap();
    }
    let root = t.root_digest();
    for p in ["0", "1a", "ab3", "zz", "0123ab", ""] {
        let p = &p.replace('z', "f");
        let (r, vo) = t.prefix_query(p);
        for step in 0..vo.path.len() {
            for s in 0..vo.path[step].siblings.len() {
                for byte in 0..32 {
                    let mut m = vo.clone();
                    m.path[step].siblings[s].1 .0[byte] ^= 0x80;
                    assert!(!verify_prefix(&m, &root, p, &r));
                }
            }
        }
        if let PrefixEnd::Diverged { children, .. } = &vo.end {
            for c in 0..children.len() {
                let mut m = vo.clone();
                if let PrefixEnd::Diverged { children, .. } = &mut m.end {
                    children[c].1 .0[0] ^= 1;
                }
                assert!(!verify_prefix(&m, &root, p, &r));
            }
        }
        for id in 0..300 {
            if !r.contains(&id) {
                let mut extra = r.clone();
                extra.push(id);
                extra.sort_unstable();
                assert!(!verify_prefix(&vo, &root, p, &extra));
            }
        }
        let bytes = vo.to_canonical_bytes();
        for bit in 0..bytes.len().min(4_000) * 8 {
            let mut m = bytes.clone();
            m[bit / 8] ^= 1 << (bit % 8);
            if let Ok(mutated) = PrefixVo::from_canonical_bytes(&m) {
                assert!(!verify_prefix(&mutated, &root, p, &r), "bit {bit}");
            }
        }
    }
}

#[test]
fn empty_result_proves_absence() {
    let mut t = Trie::new();
    for (i, k) in ["abc", "abd", "b0"].iter().enumerate() {
        t.insert(k, i as EntryId).unwrap();
    }
    let (r, vo) = t.prefix_query("ac");
    assert!(r.is_empty());
    assert!(matches!(vo.end, PrefixEnd::Diverged { .. }));
    assert!(verify_prefix(&vo, &t.root_digest(), "ac", &[]));
    assert!(!verify_prefix(&vo, &t.root_digest(), "ab", &[]));
}

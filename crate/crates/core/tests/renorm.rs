mod common;

use std::collections::HashSet;
use std::hash::{Hash, Hasher};

use common::{pt, random_crossing, staircase};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use vmperc::renorm::*;
use vmperc::Error;

/// Brute-force counts of single sites plus unordered star-adjacent pairs in
/// `B(2L)`, d = 3 (`oracles/oracle.py admissible`).
const ADMISSIBLE_PER_LEAF: [(i64, u64); 2] = [(1, 1161), (2, 8177)];

#[test]
fn count_formula_values() {
    assert_eq!(count_embeddings(3, 6, 1).unwrap(), BigUint::from(3458u32 * 866));
    assert_eq!(count_embeddings(3, 6, 2).unwrap(), BigUint::from(2_994_628u64).pow(3));
    assert_eq!(count_embeddings(2, 6, 0).unwrap(), BigUint::from(1u32));
    assert!(matches!(count_embeddings(3, 5, 0), Err(Error::InvalidArgument(_))));
}

#[test]
fn enumeration_matches_count_and_validates() {
    for depth in [0, 1] {
        let s = Scales::new(1, 6, depth).unwrap();
        let parts = enumeration_parts(3, &s).unwrap();
        let (n, bad, hashes): (u64, u64, Vec<u64>) = (0..parts)
            .into_par_iter()
            .map(|p| {
                let mut n = 0;
                let mut bad = 0;
                let mut hashes = Vec::new();
                for t in enumerate_part(3, &s, p).unwrap() {
                    n += 1;
                    bad += !validate_embedding(&t, &s).unwrap().is_empty() as u64;
                    let mut h = std::collections::hash_map::DefaultHasher::new();
                    t.hash(&mut h);
                    hashes.push(h.finish());
                }
                (n, bad, hashes)
            })
            .reduce(|| (0, 0, Vec::new()), |a, b| (a.0 + b.0, a.1 + b.1, [a.2, b.2].concat()));
        assert_eq!(BigUint::from(n), count_embeddings(3, 6, depth).unwrap());
        assert_eq!(bad, 0);
        let distinct: HashSet<u64> = hashes.into_iter().collect();
        assert_eq!(distinct.len() as u64, n);
    }
    assert!(matches!(enumerate_embeddings(3, &Scales::new(1, 6, 2).unwrap()), Err(Error::GuardExceeded(_))));
}

#[test]
fn hand_embedding_is_proper() {
    for l in [1, 2, 5] {
        let s = Scales::new(l, 6, 1).unwrap();
        let l1 = s.scale(1).unwrap();
        let t = Embedding::new(1, vec![pt(&[0, 0, 0]), pt(&[l1, 0, 0]), pt(&[0, 2 * l1, 0])]).unwrap();
        assert!(validate_embedding(&t, &s).unwrap().is_empty());
        let off = Embedding::new(1, vec![pt(&[0, 0, 0]), pt(&[l1 + 1, 0, 0]), pt(&[0, 2 * l1, 0])]).unwrap();
        assert_eq!(validate_embedding(&off, &s).unwrap().len(), if l == 1 { 1 } else { 2 });
    }
}

#[test]
fn sampled_embeddings_validate() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for depth in 0..=3 {
        let s = Scales::new(1, 6, depth).unwrap();
        for _ in 0..50 {
            let t = sample_embedding(3, &s, &mut rng).unwrap();
            assert!(validate_embedding(&t, &s).unwrap().is_empty());
            assert!(check_spread_out(&t, &s).disjoint);
        }
    }
}

#[test]
fn separated_leaves_are_spread_out() {
    // Children in orthogonal directions keep every leaf pair far apart.
    let s = Scales::new(1, 6, 1).unwrap();
    let t = Embedding::new(1, vec![pt(&[0, 0, 0]), pt(&[-6, 0, 0]), pt(&[12, 0, 0])]).unwrap();
    let r = check_spread_out(&t, &s);
    assert!(r.passed(), "{r:?}");
    assert!(r.checked > 0);
}

#[test]
fn collinear_siblings_break_the_k1_bound() {
    let s = Scales::new(1, 6, 1).unwrap();
    let t = Embedding::new(1, vec![pt(&[0, 0, 0]), pt(&[6, 0, 0]), pt(&[12, 0, 0])]).unwrap();
    let r = check_spread_out(&t, &s);
    assert!(r.disjoint);
    assert_eq!(r.violations.len(), 2);
    assert_eq!((r.violations[0].k, r.violations[0].count, r.violations[0].bound), (1, 2, 1));
}

#[test]
fn staircase_extraction() {
    for depth in 0..=2 {
        let s = Scales::new(1, 6, depth).unwrap();
        let path = staircase(3, s.top() - 1, 2 * s.top());
        let t = extract_embedding(&path, &s).unwrap();
        assert!(validate_embedding(&t, &s).unwrap().is_empty());
        assert!(leaves_crossed(&path, &t, &s));
    }
}

#[test]
fn random_paths_extract() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for depth in [1, 2] {
        let s = Scales::new(1, 6, depth).unwrap();
        for _ in 0..10 {
            let path = random_crossing(3, s.top() - 1, 2 * s.top(), &mut rng);
            let t = extract_embedding(&path, &s).unwrap();
            assert!(validate_embedding(&t, &s).unwrap().is_empty());
            assert!(leaves_crossed(&path, &t, &s));
        }
    }
}

#[test]
fn confined_path_is_rejected() {
    let s = Scales::new(1, 6, 1).unwrap();
    let path = staircase(3, 0, s.top() / 2);
    assert!(matches!(extract_embedding(&path, &s), Err(Error::Precondition(_))));
    let gap = vec![pt(&[5, 0, 0]), pt(&[7, 0, 0])];
    assert!(matches!(extract_embedding(&gap, &s), Err(Error::Precondition(_))));
}

#[test]
fn admissible_pairs_single_leaf() {
    for (l, per_leaf) in ADMISSIBLE_PER_LEAF {
        let s = Scales::new(l, 6, 0).unwrap();
        let t = Embedding::new(0, vec![pt(&[0, 0, 0])]).unwrap();
        let (pairs, summary) = enumerate_admissible_pairs(&t, &s).unwrap();
        assert_eq!(pairs.len() as u64, per_leaf);
        assert_eq!(summary.count, per_leaf);
        assert_eq!((summary.identity_failures, summary.definition_failures), (0, 0));
        assert!(BigUint::from(summary.count) <= summary.bound);
        for p in &pairs {
            assert_eq!(p.x.len() + 2 * p.y.len(), 2);
        }
    }
}

#[test]
fn admissible_pairs_two_leaves() {
    let s = Scales::new(1, 6, 1).unwrap();
    let t = Embedding::new(1, vec![pt(&[0, 0, 0]), pt(&[6, 6, 0]), pt(&[-12, 3, 0])]).unwrap();
    let summary = for_each_admissible_pair(&t, &s, |x, y| {
        assert_eq!(x.len() + 2 * y.len(), 4);
        true
    })
    .unwrap();
    assert_eq!(summary.count, ADMISSIBLE_PER_LEAF[0].1.pow(2));
    assert_eq!((summary.identity_failures, summary.definition_failures), (0, 0));
    // (|B| (3^d + 1))^2 by the binomial theorem.
    assert_eq!(summary.bound, BigUint::from((125u64 * 28).pow(2)));
    let big = Scales::new(3, 6, 0).unwrap();
    let root = Embedding::new(0, vec![pt(&[0, 0, 0])]).unwrap();
    assert!(matches!(enumerate_admissible_pairs(&root, &big), Err(Error::GuardExceeded(_))));
}

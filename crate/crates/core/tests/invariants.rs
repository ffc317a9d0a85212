mod common;

use std::collections::VecDeque;

use common::{pt, random_crossing};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vmperc::lattice::{enumerate_region, enumerate_sphere, neighbors};
use vmperc::percolation::{alpha_threshold, CrossingGeometry, CrossingSpec};
use vmperc::renorm::{extract_embedding, leaves_crossed, sample_embedding, validate_embedding, Scales};
use vmperc::stationary::{realize_config, CoalescenceStructure, SiteConfiguration};
use vmperc::stats::Moments;
use vmperc::union_find::DisjointSets;
use vmperc::{ConnectivityMode, LatticePoint, Window};

fn point(d: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-50i64..=50, d)
}

/// Partition of the window sites into classes, labelled cyclically, with minimal representatives.
fn structure(window: &Window, labels: &[usize], uniforms: &[f64]) -> CoalescenceStructure {
    let n = window.len();
    let mut rep = vec![usize::MAX; labels.iter().max().unwrap() + 1];
    let mut class_of = Vec::with_capacity(n);
    for i in 0..n {
        let l = labels[i % labels.len()];
        if rep[l] == usize::MAX {
            rep[l] = i;
        }
        class_of.push(rep[l] as u32);
    }
    let classes = class_of.iter().enumerate().filter(|&(i, &c)| c as usize == i).count();
    CoalescenceStructure::from_parts(Some(window.clone()), window.sites(), class_of, uniforms[..classes].to_vec())
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn region_and_sphere_sizes(d in 1usize..=4, l in 0i64..=5, c in point(4)) {
        let center = pt(&c[..d]);
        let w = Window::new(center.clone(), l, vmperc::Norm::LInf).unwrap();
        let region = enumerate_region(&w);
        prop_assert_eq!(region.len() as i64, (2 * l + 1).pow(d as u32));
        prop_assert!(region.windows(2).all(|p| p[0] < p[1]));
        if l > 0 {
            let s = enumerate_sphere(&center, l).unwrap();
            prop_assert_eq!(s.len() as i64, (2 * l + 1).pow(d as u32) - (2 * l - 1).pow(d as u32));
            prop_assert!(s.iter().all(|p| p.dist_inf(&center) == l));
        }
    }

    #[test]
    fn nearest_neighbours_are_star_neighbours(d in 1usize..=4, c in point(4)) {
        let p = pt(&c[..d]);
        let near = neighbors(&p, ConnectivityMode::Nearest).unwrap();
        let star = neighbors(&p, ConnectivityMode::Star).unwrap();
        prop_assert_eq!(near.len(), 2 * d);
        prop_assert_eq!(star.len(), 3usize.pow(d as u32) - 1);
        prop_assert!(near.iter().all(|q| star.contains(q) && q.dist_1(&p) == 1));
        prop_assert!(star.iter().all(|q| q.dist_inf(&p) == 1));
    }

    #[test]
    fn distances_are_metrics(a in point(3), b in point(3), c in point(3)) {
        let (a, b, c) = (pt(&a), pt(&b), pt(&c));
        prop_assert!(a.dist_inf(&c) <= a.dist_inf(&b) + b.dist_inf(&c));
        prop_assert!(a.dist_1(&c) <= a.dist_1(&b) + b.dist_1(&c));
        prop_assert!(a.dist_inf(&b) <= a.dist_1(&b) && a.dist_1(&b) <= 3 * a.dist_inf(&b));
    }

    #[test]
    fn union_find_matches_search(n in 1usize..40, edges in prop::collection::vec((0usize..40, 0usize..40), 0..60)) {
        let edges: Vec<(usize, usize)> = edges.into_iter().map(|(a, b)| (a % n, b % n)).collect();
        let mut ds = DisjointSets::new(n);
        for &(a, b) in &edges {
            ds.union(a, b);
        }
        let labels = ds.min_labels();
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut want = vec![u32::MAX; n];
        for s in 0..n {
            if want[s] != u32::MAX {
                continue;
            }
            let mut q = VecDeque::from([s]);
            want[s] = s as u32;
            while let Some(i) = q.pop_front() {
                for &j in &adj[i] {
                    if want[j] == u32::MAX {
                        want[j] = s as u32;
                        q.push_back(j);
                    }
                }
            }
        }
        prop_assert_eq!(labels, want);
    }

    #[test]
    fn threshold_matches_direct_crossing(
        labels in prop::collection::vec(0usize..12, 1..60),
        uniforms in prop::collection::vec(0.0f64..1.0, 12),
        alphas in prop::collection::vec(0.0f64..1.0, 16),
        star in any::<bool>(),
    ) {
        let mut spec = CrossingSpec::for_scale(2, 3).unwrap();
        if !star {
            spec.mode = ConnectivityMode::Nearest;
        }
        let w = spec.window().unwrap();
        let s = structure(&w, &labels, &uniforms);
        let geom = CrossingGeometry::new(&w, &spec).unwrap();
        let t = alpha_threshold(&s, &spec).unwrap().alpha_star;
        for &a in &alphas {
            let c = realize_config(&s, a).unwrap();
            prop_assert_eq!(geom.crossing(|j| c.get(j)), t.crossing_at(a));
        }
        if let vmperc::percolation::Threshold::At(a) = t {
            // The threshold is attained exactly at a class uniform.
            let c = realize_config(&s, a).unwrap();
            prop_assert!(geom.crossing(|j| c.get(j)));
        }
    }

    #[test]
    fn realization_is_monotone(
        labels in prop::collection::vec(0usize..12, 1..40),
        uniforms in prop::collection::vec(0.0f64..1.0, 12),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        let w = Window::cube(2, 3).unwrap();
        let s = structure(&w, &labels, &uniforms);
        let (lo, hi) = (realize_config(&s, a.min(b)).unwrap(), realize_config(&s, a.max(b)).unwrap());
        prop_assert!(lo.le(&hi));
        prop_assert!((0..s.len()).all(|i| hi.get(i) == hi.get(s.class_of[i] as usize)));
    }

    #[test]
    fn configuration_bytes_round_trip(bits in prop::collection::vec(any::<bool>(), 1..200), alpha in 0.0f64..=1.0) {
        let c = SiteConfiguration::from_bits(None, 3, alpha, &bits);
        let back = SiteConfiguration::from_bytes(&c.to_bytes()).unwrap();
        prop_assert_eq!(back.iter().collect::<Vec<_>>(), bits);
        prop_assert_eq!(c.complement().complement().iter().collect::<Vec<_>>(), c.iter().collect::<Vec<_>>());
    }

    #[test]
    fn moments_merge_like_one_pass(xs in prop::collection::vec(-1e3f64..1e3, 2..100), cut in 0usize..100) {
        let cut = cut % xs.len();
        let whole = Moments::from_values(&xs);
        let mut left = Moments::from_values(&xs[..cut]);
        left.merge(&Moments::from_values(&xs[cut..]));
        prop_assert!((whole.mean() - left.mean()).abs() <= 1e-9 * (1.0 + whole.mean().abs()));
        prop_assert!((whole.variance() - left.variance()).abs() <= 1e-7 * (1.0 + whole.variance()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_embeddings_are_proper(seed in any::<u64>(), depth in 0u32..=3, base in 1i64..=3) {
        let s = Scales::new(base, 6, depth).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = sample_embedding(3, &s, &mut rng).unwrap();
        prop_assert!(validate_embedding(&t, &s).unwrap().is_empty());
    }

    #[test]
    fn extraction_yields_crossed_proper_embeddings(seed in any::<u64>(), depth in 1u32..=2) {
        let s = Scales::new(1, 6, depth).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let path: Vec<LatticePoint> = random_crossing(3, s.top() - 1, 2 * s.top(), &mut rng);
        let t = extract_embedding(&path, &s).unwrap();
        prop_assert!(validate_embedding(&t, &s).unwrap().is_empty());
        prop_assert!(leaves_crossed(&path, &t, &s));
    }
}

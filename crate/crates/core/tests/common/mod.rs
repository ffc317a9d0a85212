#![allow(dead_code)]

use rand::Rng;
use vmperc::LatticePoint;

pub fn pt(c: &[i64]) -> LatticePoint {
    LatticePoint::new(c).unwrap()
}

/// `(t, t/2, t/3, ...)` for `t` from `from` to `to`: star-connected, norm `t`.
pub fn staircase(dim: usize, from: i64, to: i64) -> Vec<LatticePoint> {
    (from..=to)
        .map(|t| pt(&(0..dim).map(|i| t / (i as i64 + 1)).collect::<Vec<_>>()))
        .collect()
}

/// Random star path from a uniform point of `S(inner)` until it reaches
/// `S(outer)`. Outward or sideways moves are always taken, inward ones with
/// probability 1/4.
pub fn random_crossing<R: Rng>(dim: usize, inner: i64, outer: i64, rng: &mut R) -> Vec<LatticePoint> {
    let mut p: Vec<i64> = loop {
        let c: Vec<i64> = (0..dim).map(|_| rng.random_range(-inner..=inner)).collect();
        if c.iter().any(|x| x.abs() == inner) {
            break c;
        }
    };
    let norm = |c: &[i64]| c.iter().map(|x| x.abs()).max().unwrap();
    let mut path = vec![pt(&p)];
    while norm(&p) < outer {
        let q: Vec<i64> = p.iter().map(|x| x + rng.random_range(-1..=1)).collect();
        if q == p {
            continue;
        }
        if norm(&q) >= norm(&p) || rng.random_bool(0.25) {
            p = q;
            path.push(pt(&p));
        }
    }
    path
}

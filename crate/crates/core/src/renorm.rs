//! Multi-scale renormalization combinatorics: proper embeddings of the binary
//! tree `T_N`, their count, extraction from crossing paths, the spread-out
//! property of the leaves and admissible pairs.
//!
//! Nodes are stored in heap order (root 0, children of `i` at `2i + 1` and
//! `2i + 2`). In JSON a node is keyed by its word over `{1, 2}`, the root by `""`.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{check_coord, enumerate_sphere, neighbor_offsets, validate_path, ConnectivityMode, LatticePoint};

/// Largest depth accepted by `count_embeddings`.
pub const MAX_COUNT_DEPTH: u32 = 24;
/// Largest depth for exhaustive enumeration.
pub const MAX_ENUM_DEPTH: u32 = 1;
pub const MAX_ADMISSIBLE_DEPTH: u32 = 1;
pub const MAX_ADMISSIBLE_SCALE: i64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scales {
    #[serde(rename = "L")]
    pub base: i64,
    pub ell: i64,
    #[serde(rename = "N")]
    pub depth: u32,
}

impl Scales {
    pub fn new(base: i64, ell: i64, depth: u32) -> Result<Self> {
        if base < 1 {
            return Err(Error::InvalidArgument(format!("L = {base} must be >= 1")));
        }
        if ell < 6 {
            return Err(Error::InvalidArgument(format!("ell = {ell} is below 6, which the embedding geometry does not support")));
        }
        let s = Scales { base, ell, depth };
        s.scale(depth)?;
        Ok(s)
    }

    /// `L_k = L * ell^k`.
    pub fn scale(&self, k: u32) -> Result<i64> {
        let v = self
            .ell
            .checked_pow(k)
            .and_then(|p| p.checked_mul(self.base))
            .ok_or(Error::CoordinateOverflow { value: i64::MAX })?;
        check_coord(2 * v)?;
        Ok(v)
    }

    pub fn top(&self) -> i64 {
        self.scale(self.depth).expect("checked at construction")
    }
}

pub fn node_count(depth: u32) -> usize {
    (1usize << (depth + 1)) - 1
}

pub fn node_depth(i: usize) -> u32 {
    (usize::BITS - 1) - (i + 1).leading_zeros()
}

/// Word over `{1, 2}` naming heap node `i`.
pub fn node_name(i: usize) -> String {
    let mut s = Vec::new();
    let mut j = i;
    while j > 0 {
        s.push(if j % 2 == 1 { b'1' } else { b'2' });
        j = (j - 1) / 2;
    }
    s.reverse();
    String::from_utf8(s).unwrap()
}

pub fn node_index(name: &str) -> Result<usize> {
    name.bytes().try_fold(0usize, |i, b| match b {
        b'1' => Ok(2 * i + 1),
        b'2' => Ok(2 * i + 2),
        _ => Err(Error::Parse(format!("tree node '{name}' is not a word over {{1, 2}}"))),
    })
}

/// A map from the nodes of `T_N` to lattice points, not necessarily proper.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Embedding {
    depth: u32,
    nodes: Vec<LatticePoint>,
}

impl Embedding {
    pub fn new(depth: u32, nodes: Vec<LatticePoint>) -> Result<Self> {
        if nodes.len() != node_count(depth) {
            return Err(Error::InvalidArgument(format!(
                "depth {depth} needs {} nodes, got {}",
                node_count(depth),
                nodes.len()
            )));
        }
        let d = nodes[0].dim();
        if let Some(p) = nodes.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
        }
        Ok(Embedding { depth, nodes })
    }

    /// Builds from node names; fails on missing or extra nodes.
    pub fn from_map(map: &BTreeMap<String, LatticePoint>) -> Result<Self> {
        let mut idx = Vec::with_capacity(map.len());
        for (k, p) in map {
            idx.push((node_index(k)?, p.clone()));
        }
        let n = idx.len();
        let depth = (0..=MAX_COUNT_DEPTH)
            .find(|&d| node_count(d) == n)
            .ok_or_else(|| Error::InvalidArgument(format!("{n} nodes do not form a complete tree")))?;
        let mut nodes: Vec<Option<LatticePoint>> = vec![None; n];
        for (i, p) in idx {
            if i >= n {
                return Err(Error::InvalidArgument(format!("node '{}' lies below depth {depth}", node_name(i))));
            }
            nodes[i] = Some(p);
        }
        let nodes = nodes
            .into_iter()
            .enumerate()
            .map(|(i, p)| p.ok_or_else(|| Error::InvalidArgument(format!("missing node '{}'", node_name(i)))))
            .collect::<Result<Vec<_>>>()?;
        Embedding::new(depth, nodes)
    }

    pub fn to_map(&self) -> BTreeMap<String, LatticePoint> {
        self.nodes.iter().enumerate().map(|(i, p)| (node_name(i), p.clone())).collect()
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].dim()
    }

    pub fn nodes(&self) -> &[LatticePoint] {
        &self.nodes
    }

    pub fn get(&self, name: &str) -> Option<&LatticePoint> {
        self.nodes.get(node_index(name).ok()?)
    }

    /// Leaves in heap order, i.e. `11..1` first.
    pub fn leaves(&self) -> &[LatticePoint] {
        &self.nodes[node_count(self.depth) / 2..]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl Serialize for Embedding {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(self.nodes.len()))?;
        for (i, p) in self.nodes.iter().enumerate() {
            m.serialize_entry(&node_name(i), p)?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for Embedding {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<String, LatticePoint>::deserialize(d)?;
        Embedding::from_map(&map).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum Violation {
    /// The root is not mapped to the origin.
    Root { got: LatticePoint },
    /// Node at depth `k` is not in `L_{N-k} Z^d`.
    Lattice { node: String, spacing: i64 },
    /// Child `m_i` is not at the prescribed distance from its parent.
    ChildDistance { node: String, expected: i64, got: i64 },
}

pub fn validate_embedding(t: &Embedding, s: &Scales) -> Result<Vec<Violation>> {
    if t.depth != s.depth {
        return Err(Error::InvalidArgument(format!("embedding depth {} differs from N = {}", t.depth, s.depth)));
    }
    let mut out = Vec::new();
    if t.nodes[0].norm_inf() != 0 {
        out.push(Violation::Root { got: t.nodes[0].clone() });
    }
    for (i, p) in t.nodes.iter().enumerate() {
        let k = node_depth(i);
        let spacing = s.scale(s.depth - k)?;
        if p.coords().iter().any(|c| c.rem_euclid(spacing) != 0) {
            out.push(Violation::Lattice { node: node_name(i), spacing });
        }
        if i > 0 {
            let parent = &t.nodes[(i - 1) / 2];
            let pk = s.scale(s.depth - (k - 1))?;
            let expected = if i % 2 == 1 { pk } else { 2 * pk };
            let got = p.dist_inf(parent);
            if got != expected {
                out.push(Violation::ChildDistance { node: node_name(i), expected, got });
            }
        }
    }
    Ok(out)
}

/// `[((4l+1)^d - (4l-1)^d) ((2l+1)^d - (2l-1)^d)]^(2^N - 1)`.
pub fn count_embeddings(dim: usize, ell: i64, depth: u32) -> Result<BigUint> {
    if ell < 6 {
        return Err(Error::InvalidArgument(format!("ell = {ell} is below 6, where the count is not asserted")));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    if depth > MAX_COUNT_DEPTH {
        return Err(Error::GuardExceeded(format!("N = {depth} exceeds {MAX_COUNT_DEPTH}")));
    }
    let shell = |r: i64| BigUint::from((2 * r + 1) as u64).pow(dim as u32) - BigUint::from((2 * r - 1) as u64).pow(dim as u32);
    let base = shell(2 * ell) * shell(ell);
    Ok(base.pow((1u32 << depth) - 1))
}

/// Both children offsets in units of the child lattice spacing.
struct ChildSpheres {
    near: Vec<LatticePoint>,
    far: Vec<LatticePoint>,
}

impl ChildSpheres {
    fn new(dim: usize, ell: i64) -> Result<Self> {
        let o = LatticePoint::origin(dim);
        Ok(ChildSpheres { near: enumerate_sphere(&o, ell)?, far: enumerate_sphere(&o, 2 * ell)? })
    }
}

fn place(parent: &LatticePoint, unit: i64, offset: &LatticePoint) -> LatticePoint {
    let c = parent.coords().iter().zip(offset.coords()).map(|(a, b)| a + unit * b).collect();
    LatticePoint::from_coords_unchecked(c)
}

fn check_enum_guard(dim: usize, s: &Scales) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    if s.depth > MAX_ENUM_DEPTH {
        return Err(Error::GuardExceeded(format!("enumeration needs N <= {MAX_ENUM_DEPTH}, got {}", s.depth)));
    }
    Ok(())
}

/// Number of independent enumeration parts; part `i` fixes the `i`-th near child.
pub fn enumeration_parts(dim: usize, s: &Scales) -> Result<usize> {
    check_enum_guard(dim, s)?;
    if s.depth == 0 {
        return Ok(1);
    }
    Ok(ChildSpheres::new(dim, s.ell)?.near.len())
}

/// All embeddings whose near child is the `part`-th candidate, far children in
/// lexicographic order.
pub fn enumerate_part(dim: usize, s: &Scales, part: usize) -> Result<impl Iterator<Item = Embedding>> {
    check_enum_guard(dim, s)?;
    let root = LatticePoint::origin(dim);
    let (near, far): (Vec<LatticePoint>, Vec<LatticePoint>) = if s.depth == 0 {
        if part > 0 {
            return Err(Error::InvalidArgument(format!("part {part} out of range")));
        }
        (Vec::new(), Vec::new())
    } else {
        let sp = ChildSpheres::new(dim, s.ell)?;
        let c1 = sp.near.get(part).ok_or_else(|| Error::InvalidArgument(format!("part {part} out of range")))?;
        let unit = s.scale(0)?;
        (vec![place(&root, unit, c1)], sp.far.iter().map(|f| place(&root, unit, f)).collect())
    };
    let depth = s.depth;
    let it: Box<dyn Iterator<Item = Embedding>> = if depth == 0 {
        Box::new(std::iter::once(Embedding { depth, nodes: vec![root] }))
    } else {
        let c1 = near.into_iter().next().unwrap();
        Box::new(far.into_iter().map(move |c2| Embedding { depth, nodes: vec![root.clone(), c1.clone(), c2] }))
    };
    Ok(it)
}

/// Every proper embedding for `N <= 1`, grouped by near child.
pub fn enumerate_embeddings(dim: usize, s: &Scales) -> Result<impl Iterator<Item = Embedding>> {
    let parts = enumeration_parts(dim, s)?;
    let s = *s;
    let mut its = Vec::with_capacity(parts);
    for p in 0..parts {
        its.push(enumerate_part(dim, &s, p)?);
    }
    Ok(its.into_iter().flatten())
}

/// Uniform draw from the proper embeddings: each child independently uniform
/// on its admissible sphere.
pub fn sample_embedding<R: Rng + ?Sized>(dim: usize, s: &Scales, rng: &mut R) -> Result<Embedding> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    if s.depth > 20 {
        return Err(Error::GuardExceeded(format!("N = {} is too deep to sample", s.depth)));
    }
    let n = node_count(s.depth);
    let mut nodes = Vec::with_capacity(n);
    nodes.push(LatticePoint::origin(dim));
    let mut off = vec![0i64; dim];
    for i in 1..n {
        let k = node_depth(i);
        let unit = s.scale(s.depth - k)?;
        let r = if i % 2 == 1 { s.ell } else { 2 * s.ell };
        loop {
            for c in off.iter_mut() {
                *c = rng.random_range(-r..=r);
            }
            if off.iter().any(|c| c.abs() == r) {
                break;
            }
        }
        let parent = &nodes[(i - 1) / 2];
        let c = parent.coords().iter().zip(&off).map(|(a, b)| a + unit * b).collect();
        nodes.push(LatticePoint::from_coords_unchecked(c));
    }
    Ok(Embedding { depth: s.depth, nodes })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpreadViolation {
    pub leaf: String,
    pub k: u32,
    pub count: usize,
    pub bound: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpreadOutReport {
    /// The balls `B(T(m), 2L)` around the leaves are pairwise disjoint.
    pub disjoint: bool,
    /// Largest l-infinity distance between two leaf images.
    pub diameter: i64,
    /// Number of `(leaf, k)` inequalities evaluated.
    pub checked: usize,
    pub violations: Vec<SpreadViolation>,
}

impl SpreadOutReport {
    pub fn passed(&self) -> bool {
        self.disjoint && self.violations.is_empty()
    }
}

/// l-infinity distance between the cubes `B(a, r)` and `B(b, r)`.
fn ball_distance(a: &LatticePoint, b: &LatticePoint, r: i64) -> i64 {
    (a.dist_inf(b) - 2 * r).max(0)
}

/// For each leaf `m0` and each `k >= 1` with `ell^k L / 2` below the leaf
/// diameter, counts leaves whose `2L`-ball lies within `ell^k L / 2` of the
/// `2L`-ball at `m0` and compares with `2^(k-1)`.
pub fn check_spread_out(t: &Embedding, s: &Scales) -> SpreadOutReport {
    let leaves = t.leaves();
    let r = 2 * s.base;
    let mut diameter = 0;
    let mut disjoint = true;
    for (i, a) in leaves.iter().enumerate() {
        for b in &leaves[i + 1..] {
            let d = a.dist_inf(b);
            diameter = diameter.max(d);
            disjoint &= d > 2 * r;
        }
    }
    let mut checked = 0;
    let mut violations = Vec::new();
    let first_leaf = node_count(t.depth) / 2;
    let mut k = 1u32;
    // Thresholds are compared doubled so odd ell^k L stays exact.
    while let Some(twice) = s.ell.checked_pow(k).and_then(|p| p.checked_mul(s.base)) {
        if twice >= 2 * diameter {
            break;
        }
        let bound = 1usize << (k - 1).min(62);
        for (i, a) in leaves.iter().enumerate() {
            let count = leaves.iter().filter(|b| 2 * ball_distance(a, b, r) <= twice).count();
            checked += 1;
            if count > bound {
                violations.push(SpreadViolation { leaf: node_name(first_leaf + i), k, count, bound });
            }
        }
        k += 1;
    }
    SpreadOutReport { disjoint, diameter, checked, violations }
}

/// Smallest and largest l-infinity distance from `c` along the path. For a
/// star path every integer in between is attained.
fn distance_range(path: &[LatticePoint], c: &LatticePoint) -> (i64, i64) {
    path.iter().fold((i64::MAX, i64::MIN), |(lo, hi), p| {
        let d = p.dist_inf(c);
        (lo.min(d), hi.max(d))
    })
}

/// The path meets both `S(c, scale - 1)` and `S(c, 2 scale)`.
pub fn crosses(path: &[LatticePoint], c: &LatticePoint, scale: i64) -> bool {
    let (lo, hi) = distance_range(path, c);
    lo <= scale - 1 && 2 * scale <= hi
}

/// Finds a proper embedding whose leaf annuli are all crossed by `path`.
/// Candidates are scanned lexicographically with backtracking within each
/// subtree; a node with no viable candidate is reported as `NoCandidate`.
pub fn extract_embedding(path: &[LatticePoint], s: &Scales) -> Result<Embedding> {
    if !validate_path(path, ConnectivityMode::Star)? {
        return Err(Error::Precondition("path is not star-connected".into()));
    }
    let dim = path[0].dim();
    let root = LatticePoint::origin(dim);
    if !crosses(path, &root, s.top()) {
        let (lo, hi) = distance_range(path, &root);
        return Err(Error::Precondition(format!(
            "path must meet S({}) and S({}); its norms span [{lo}, {hi}]",
            s.top() - 1,
            2 * s.top()
        )));
    }
    let spheres = ChildSpheres::new(dim, s.ell)?;
    let mut nodes = vec![root; node_count(s.depth)];
    extract_subtree(path, s, &spheres, 0, &mut nodes)?;
    let t = Embedding { depth: s.depth, nodes };
    let v = validate_embedding(&t, s)?;
    if !v.is_empty() {
        return Err(Error::NoCandidate { node: String::new(), detail: format!("extracted map is not proper: {v:?}") });
    }
    Ok(t)
}

fn extract_subtree(
    path: &[LatticePoint],
    s: &Scales,
    spheres: &ChildSpheres,
    i: usize,
    nodes: &mut [LatticePoint],
) -> Result<()> {
    let k = node_depth(i);
    if k == s.depth {
        return Ok(());
    }
    let unit = s.scale(s.depth - k - 1)?;
    for (child, cands) in [(2 * i + 1, &spheres.near), (2 * i + 2, &spheres.far)] {
        let mut last = None;
        let mut found = false;
        for off in cands {
            let c = place(&nodes[i], unit, off);
            if !crosses(path, &c, unit) {
                continue;
            }
            nodes[child] = c;
            match extract_subtree(path, s, spheres, child, nodes) {
                Ok(()) => {
                    found = true;
                    break;
                }
                Err(e @ Error::NoCandidate { .. }) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        if !found {
            return Err(last.unwrap_or_else(|| Error::NoCandidate {
                node: node_name(child),
                detail: format!("no point at distance {} from {} has a crossed annulus of scale {unit}", cands[0].norm_inf() * unit, nodes[i]),
            }));
        }
    }
    Ok(())
}

/// The leaf-annulus condition checked on an extracted embedding.
pub fn leaves_crossed(path: &[LatticePoint], t: &Embedding, s: &Scales) -> bool {
    t.leaves().iter().all(|c| crosses(path, c, s.base))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissiblePair {
    #[serde(rename = "X")]
    pub x: Vec<LatticePoint>,
    #[serde(rename = "Y")]
    pub y: Vec<LatticePoint>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdmissibleSummary {
    pub count: u64,
    /// `sum_A (|B(2L)| 3^d)^|A| |B(2L)|^(2^N - |A|)`.
    pub bound: BigUint,
    /// Pairs violating `|X| / 2 + |Y| = 2^N`.
    pub identity_failures: u64,
    /// Pairs failing the per-leaf dichotomy or the adjacency condition on re-check.
    pub definition_failures: u64,
}

/// Per-leaf choice: a single site or an unordered star-adjacent pair.
#[derive(Clone, Copy, Debug)]
enum LeafChoice {
    One(usize),
    Two(usize, usize),
}

fn leaf_choices(ball: &[LatticePoint], dim: usize) -> Vec<LeafChoice> {
    let mut out: Vec<LeafChoice> = (0..ball.len()).map(LeafChoice::One).collect();
    let star = neighbor_offsets(dim, ConnectivityMode::Star);
    let index: std::collections::HashMap<&LatticePoint, usize> = ball.iter().enumerate().map(|(i, p)| (p, i)).collect();
    for (i, p) in ball.iter().enumerate() {
        for o in &star {
            let q = LatticePoint::from_coords_unchecked(p.coords().iter().zip(o).map(|(a, b)| a + b).collect());
            if let Some(&j) = index.get(&q) {
                if j > i {
                    out.push(LeafChoice::Two(i, j));
                }
            }
        }
    }
    out
}

fn admissible_bound(dim: usize, base: i64, leaves: usize) -> BigUint {
    let ball = BigUint::from((4 * base + 1) as u64).pow(dim as u32);
    let with_pair = &ball * BigUint::from(3u32).pow(dim as u32);
    (0..=leaves)
        .map(|a| binomial(leaves, a) * with_pair.pow(a as u32) * ball.pow((leaves - a) as u32))
        .sum()
}

fn binomial(n: usize, k: usize) -> BigUint {
    (0..k).fold(BigUint::from(1u32), |acc, i| acc * BigUint::from(n - i) / BigUint::from(i + 1))
}

/// Streams every admissible pair for `t` at bottom scale `L = s.base`.
/// The callback receives borrowed site lists; it may stop the stream by
/// returning `false`.
pub fn for_each_admissible_pair(
    t: &Embedding,
    s: &Scales,
    mut f: impl FnMut(&[LatticePoint], &[LatticePoint]) -> bool,
) -> Result<AdmissibleSummary> {
    if t.depth > MAX_ADMISSIBLE_DEPTH || s.base > MAX_ADMISSIBLE_SCALE {
        return Err(Error::GuardExceeded(format!(
            "admissible pairs need N <= {MAX_ADMISSIBLE_DEPTH} and L <= {MAX_ADMISSIBLE_SCALE}, got N = {}, L = {}",
            t.depth, s.base
        )));
    }
    let v = validate_embedding(t, s)?;
    if !v.is_empty() {
        return Err(Error::Precondition(format!("embedding is not proper: {v:?}")));
    }
    let r = 2 * s.base;
    let leaves = t.leaves();
    if !check_spread_out(t, s).disjoint {
        return Err(Error::Precondition("leaf balls overlap".into()));
    }
    let dim = t.dim();
    let balls: Vec<Vec<LatticePoint>> = leaves
        .iter()
        .map(|c| crate::lattice::BoxIter::centered(c.coords(), r).map(LatticePoint::from_coords_unchecked).collect())
        .collect();
    let choices = leaf_choices(&balls[0], dim);
    let target = leaves.len();
    let mut summary = AdmissibleSummary {
        count: 0,
        bound: admissible_bound(dim, s.base, leaves.len()),
        identity_failures: 0,
        definition_failures: 0,
    };
    // Odometer over per-leaf choices; choice lists are translation invariant.
    let mut idx = vec![0usize; leaves.len()];
    let mut xs = Vec::with_capacity(2 * target);
    let mut ys = Vec::with_capacity(target);
    loop {
        xs.clear();
        ys.clear();
        for (leaf, &ci) in idx.iter().enumerate() {
            match choices[ci] {
                LeafChoice::One(a) => ys.push(balls[leaf][a].clone()),
                LeafChoice::Two(a, b) => {
                    xs.push(balls[leaf][a].clone());
                    xs.push(balls[leaf][b].clone());
                }
            }
        }
        summary.count += 1;
        if xs.len() + 2 * ys.len() != 2 * target {
            summary.identity_failures += 1;
        }
        if !is_admissible(leaves, r, &xs, &ys) {
            summary.definition_failures += 1;
        }
        if !f(&xs, &ys) {
            break;
        }
        let mut j = 0;
        while j < idx.len() {
            idx[j] += 1;
            if idx[j] < choices.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == idx.len() {
            break;
        }
    }
    Ok(summary)
}

/// Direct check of the admissibility definition against the leaf centres.
pub fn is_admissible(leaves: &[LatticePoint], r: i64, xs: &[LatticePoint], ys: &[LatticePoint]) -> bool {
    let inside = |c: &LatticePoint, p: &LatticePoint| p.dist_inf(c) <= r;
    let covered = |p: &LatticePoint| leaves.iter().any(|c| inside(c, p));
    if !xs.iter().chain(ys).all(covered) {
        return false;
    }
    leaves.iter().all(|c| {
        let mut xin = xs.iter().filter(|p| inside(c, p));
        let (a, b, more) = (xin.next(), xin.next(), xin.next().is_some());
        let yin = ys.iter().filter(|p| inside(c, p)).count();
        match (a, b, more, yin) {
            (Some(a), Some(b), false, 0) => a.dist_inf(b) == 1,
            (None, None, false, 1) => true,
            _ => false,
        }
    })
}

/// Collects every admissible pair; intended for the smallest cases only.
pub fn enumerate_admissible_pairs(t: &Embedding, s: &Scales) -> Result<(Vec<AdmissiblePair>, AdmissibleSummary)> {
    let mut out = Vec::new();
    let summary = for_each_admissible_pair(t, s, |x, y| {
        out.push(AdmissiblePair { x: x.to_vec(), y: y.to_vec() });
        true
    })?;
    Ok((out, summary))
}
